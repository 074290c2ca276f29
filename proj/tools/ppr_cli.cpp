// Command-line harness for the RL-circuit experiments.
//
//   ppr sweep   --config <file> [--out <dir>] [--workers n] [--seed s]
//   ppr costs   --config <file> ...
//   ppr signals --config <file> ...
//   ppr single  --config <file> ... [--strict]
//
// Exit codes: 0 success, 2 configuration error, 3 non-convergence under
// `single --strict`.

#include "ppr/config.hpp"
#include "ppr/errors.hpp"
#include "ppr/experiments.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNonConvergence = 3;

struct CommonOptions {
    std::string config_path;
    std::string out_dir;
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config (key = value)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out_dir, "output directory (default out/<name>)");
    cmd->add_option("--workers", opts.workers, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", opts.seed, "seed for the power-iteration start vector");
}

ppr::ExperimentConfig resolve(const CommonOptions& opts) {
    ppr::ExperimentConfig cfg = ppr::load_experiment_config(opts.config_path);
    if (!opts.out_dir.empty()) {
        cfg.output_dir = opts.out_dir;
    }
    if (opts.workers) {
        cfg.workers = *opts.workers;
    }
    if (opts.seed) {
        cfg.seed = *opts.seed;
    }
    cfg.validate();
    return cfg;
}

std::ofstream open_output(const std::filesystem::path& dir, const std::string& file) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / file);
    if (!out) {
        throw std::runtime_error("cannot write " + (dir / file).string());
    }
    return out;
}

int run_sweep(const ppr::ExperimentConfig& cfg) {
    const auto result = ppr::run_convergence_sweep(cfg);
    const auto dir = cfg.resolved_output_dir();
    {
        auto csv = open_output(dir, "sweep.csv");
        ppr::write_sweep_csv(result, csv);
    }
    {
        auto svg = open_output(dir, "sweep.svg");
        svg << ppr::render_sweep_svg(result, cfg.bound_depth);
    }
    double iterations = 0.0;
    int bound_violations = 0;
    for (const auto& r : result.rows) {
        iterations += r.iterations;
        if (!(r.rho_num < r.x_bound)) {
            ++bound_violations;
        }
    }
    std::cout << "sweep: " << result.rows.size() << " runs, mean iterations "
              << iterations / static_cast<double>(result.rows.size()) << ", bound violations "
              << bound_violations << "\nwrote " << (dir / "sweep.csv").string() << " and "
              << (dir / "sweep.svg").string() << '\n';
    return 0;
}

int run_costs(const ppr::ExperimentConfig& cfg) {
    const auto result = ppr::run_cost_comparison(cfg);
    const auto dir = cfg.resolved_output_dir();
    {
        auto csv = open_output(dir, "costs.csv");
        ppr::write_cost_csv(result, csv);
    }
    {
        auto svg = open_output(dir, "costs.svg");
        svg << ppr::render_cost_svg(result);
    }
    for (const auto& r : result.rows) {
        std::cout << r.method << ": " << r.effective_solves << " effective solves ("
                  << r.total_solves << " total), " << r.iterations_or_periods
                  << " iterations/periods\n";
    }
    const double seq = static_cast<double>(result.rows.front().effective_solves);
    std::cout << "speedup over sequential: classical "
              << seq / static_cast<double>(result.rows[1].effective_solves) << "x, PP-IC "
              << seq / static_cast<double>(result.rows[2].effective_solves) << "x\n";
    return 0;
}

int run_signals(const ppr::ExperimentConfig& cfg) {
    const auto dir = cfg.resolved_output_dir();
    auto svg = open_output(dir, "signals.svg");
    svg << ppr::render_signals_svg(cfg);
    std::cout << "wrote " << (dir / "signals.svg").string() << '\n';
    return 0;
}

int run_single(const ppr::ExperimentConfig& cfg, bool strict) {
    const auto result = ppr::run_single(cfg);
    const auto dir = cfg.resolved_output_dir();
    {
        auto csv = open_output(dir, "iterates.csv");
        ppr::write_iterates_csv(result, csv);
    }
    const auto& run = result.run;
    std::cout << "PP-IC with N=" << run.subintervals() << ": "
              << (run.converged_at ? "converged after " + std::to_string(*run.converged_at) +
                                         " iterations"
                                   : std::string("did not converge"))
              << '\n';
    if (result.rho_num) {
        std::cout << "rho_num = " << *result.rho_num << ", x_" << cfg.bound_depth << " = "
                  << result.x_bound << '\n';
    }
    if (result.rho_asym) {
        std::cout << "spectral radius of S = " << *result.rho_asym << '\n';
    }
    std::cout << "effective solves " << run.cost.effective_solves(cfg.parallel_accounting)
              << '\n';
    if (strict && !run.converged_at) {
        return kExitNonConvergence;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Periodic Parareal with reduced coarse dynamics: RL-circuit experiments"};
    app.require_subcommand(1);

    CommonOptions sweep_opts;
    CommonOptions costs_opts;
    CommonOptions signals_opts;
    CommonOptions single_opts;
    bool strict = false;

    auto* sweep = app.add_subcommand("sweep", "convergence factor vs coarse step size");
    add_common(sweep, sweep_opts);
    auto* costs = app.add_subcommand("costs", "effective linear-solve counts of three approaches");
    add_common(costs, costs_opts);
    auto* signals = app.add_subcommand("signals", "plot the PWM source and coarse inputs");
    add_common(signals, signals_opts);
    auto* single = app.add_subcommand("single", "one PP-IC run with a full iterate dump");
    add_common(single, single_opts);
    single->add_flag("--strict", strict, "exit with code 3 if the run does not converge");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*sweep) {
            return run_sweep(resolve(sweep_opts));
        }
        if (*costs) {
            return run_costs(resolve(costs_opts));
        }
        if (*signals) {
            return run_signals(resolve(signals_opts));
        }
        return run_single(resolve(single_opts), strict);
    } catch (const ppr::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
