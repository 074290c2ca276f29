#pragma once

// Flat "key = value" configuration text. '#' starts a comment; blank lines
// are ignored; keys are unique.

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ppr {

class KeyValueConfig {
public:
    static KeyValueConfig parse(std::istream& in);
    static KeyValueConfig load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    [[nodiscard]] bool contains(const std::string& key) const;

    [[nodiscard]] std::optional<std::string> get_string(const std::string& key) const;
    [[nodiscard]] std::optional<double> get_double(const std::string& key) const;
    [[nodiscard]] std::optional<long long> get_int(const std::string& key) const;
    [[nodiscard]] std::optional<bool> get_bool(const std::string& key) const;
    /// Comma-separated list, entries trimmed.
    [[nodiscard]] std::optional<std::vector<std::string>> get_list(const std::string& key) const;

    /// Throws ConfigError naming the first key not in `known`.
    void require_known(const std::set<std::string>& known) const;

private:
    std::map<std::string, std::string> entries_;
};

}  // namespace ppr
