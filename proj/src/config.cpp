#include "ppr/config.hpp"

#include "ppr/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>

namespace ppr {

namespace {

std::string trim(std::string_view s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    const auto first = std::find_if(s.begin(), s.end(), not_space);
    const auto last = std::find_if(s.rbegin(), s.rend(), not_space).base();
    return (first < last) ? std::string(first, last) : std::string();
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
    KeyValueConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const std::string body = trim(line);
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        }
        if (cfg.contains(key)) {
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        cfg.set(key, value);
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    return parse(in);
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
    entries_[key] = value;
}

bool KeyValueConfig::contains(const std::string& key) const { return entries_.count(key) != 0; }

std::optional<std::string> KeyValueConfig::get_string(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<double> KeyValueConfig::get_double(const std::string& key) const {
    const auto s = get_string(key);
    if (!s) {
        return std::nullopt;
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(*s, &used);
        if (used != s->size()) {
            throw ConfigError("");
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': '" + *s + "' is not a number");
    }
}

std::optional<long long> KeyValueConfig::get_int(const std::string& key) const {
    const auto s = get_string(key);
    if (!s) {
        return std::nullopt;
    }
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
    if (ec != std::errc() || ptr != s->data() + s->size()) {
        throw ConfigError("key '" + key + "': '" + *s + "' is not an integer");
    }
    return v;
}

std::optional<bool> KeyValueConfig::get_bool(const std::string& key) const {
    const auto s = get_string(key);
    if (!s) {
        return std::nullopt;
    }
    if (*s == "true" || *s == "1" || *s == "yes") {
        return true;
    }
    if (*s == "false" || *s == "0" || *s == "no") {
        return false;
    }
    throw ConfigError("key '" + key + "': '" + *s + "' is not a boolean");
}

std::optional<std::vector<std::string>> KeyValueConfig::get_list(const std::string& key) const {
    const auto s = get_string(key);
    if (!s) {
        return std::nullopt;
    }
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s->size()) {
        const auto comma = s->find(',', start);
        const auto end = (comma == std::string::npos) ? s->size() : comma;
        if (auto item = trim(std::string_view(*s).substr(start, end - start)); !item.empty()) {
            out.push_back(std::move(item));
        }
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

void KeyValueConfig::require_known(const std::set<std::string>& known) const {
    for (const auto& [key, value] : entries_) {
        if (known.count(key) == 0) {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
}

}  // namespace ppr
