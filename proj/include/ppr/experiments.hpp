#pragma once

// RL-circuit experiment harness: convergence-factor sweep over coarse step
// sizes, cost comparison of the three steady-state approaches, and the signal
// plot. Everything here is deterministic for a given config.

#include "ppr/analysis.hpp"
#include "ppr/parareal.hpp"
#include "ppr/problem.hpp"
#include "ppr/propagators.hpp"
#include "ppr/report.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ppr {

class KeyValueConfig;

inline constexpr int kCsvSchemaVersion = 1;

struct ExperimentConfig {
    std::string name = "rl_circuit";

    double resistance_ohm = 0.01;
    double inductance_h = 0.001;
    /// Override the RL normalization with an explicit decay rate and gain.
    std::optional<double> kappa_per_s;
    std::optional<double> forcing_scale;
    double period_s = 0.02;
    int pwm_teeth = 400;

    std::vector<CoarseKind> coarse_inputs{CoarseKind::sine, CoarseKind::step};
    /// Coarse input for `costs` and `single`.
    CoarseKind coarse_input = CoarseKind::sine;

    PropagatorKind fine_propagator = PropagatorKind::exact_linear;
    /// Fine step dT_fine = period_s / 2^fine_step_exponent.
    int fine_step_exponent = 18;

    /// Sweep over dT = period_s / 2^p.
    int p_min = 1;
    int p_max = 17;
    double tolerance = 1e-8;
    int bound_depth = 256;
    int max_iterations = 1000;
    double initial_guess = 0.0;

    /// Subintervals per period for `costs` and `single`.
    int subintervals = 512;
    double steady_tol = 1e-8;
    int max_periods = 5000;
    /// Count only one subinterval's fine work per Parareal iteration.
    bool parallel_accounting = true;

    int signal_plot_teeth = 100;

    std::filesystem::path output_dir;
    int workers = 1;
    std::uint64_t seed = 42;

    [[nodiscard]] double fine_step_s() const;
    [[nodiscard]] double kappa() const;
    [[nodiscard]] double scale() const;
    [[nodiscard]] LinearScalarProblem problem(CoarseKind coarse) const;
    [[nodiscard]] PropagatorSpec fine_spec() const;
    [[nodiscard]] std::filesystem::path resolved_output_dir() const;

    /// Throws ConfigError.
    void validate() const;
};

ExperimentConfig experiment_config_from(const KeyValueConfig& kv);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// --- convergence sweep -----------------------------------------------------

struct SweepRow {
    int p = 0;
    double dT_s = 0.0;
    CoarseKind coarse_kind = CoarseKind::sine;
    int iterations = 0;
    bool converged = false;
    double rho_num = 0.0;
    double x_bound = 0.0;
    double contraction_margin = 0.0;
    double initial_error = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

/// One PP-IC run per (p, coarse input). The reference for rho_num matches the
/// fine solver: closed form for the exact propagator, the discrete periodic
/// state of the Backward Euler map otherwise.
SweepResult run_convergence_sweep(const ExperimentConfig& config);

void write_sweep_csv(const SweepResult& result, std::ostream& out);
std::string render_sweep_svg(const SweepResult& result, int bound_depth);

// --- cost comparison -------------------------------------------------------

struct CostRow {
    std::string method;
    std::size_t effective_solves = 0;
    std::size_t total_solves = 0;
    int iterations_or_periods = 0;
    double end_state_diff_vs_oracle = 0.0;
};

struct CostComparison {
    std::vector<CostRow> rows;  // sequential, classical_parareal_ivp, pp_ic
    SteadyStateResult sequential;
    PararealRun classical;
    PararealRun pp_ic;
    double oracle_state = 0.0;
    /// Periodic state at t = 0 and t = T as reported by each approach.
    double sequential_start = 0.0;
    double sequential_end = 0.0;
    double classical_start = 0.0;
    double classical_end = 0.0;
    double pp_ic_start = 0.0;
    double pp_ic_end = 0.0;
};

/// Sequential stepping to steady state, classical Parareal over the horizon the
/// sequential run needed (same coarse step), and PP-IC.
CostComparison run_cost_comparison(const ExperimentConfig& config);

void write_cost_csv(const CostComparison& result, std::ostream& out);
std::string render_cost_svg(const CostComparison& result);

// --- signals ---------------------------------------------------------------

/// One period of the PWM source (as a staircase over its pieces), the sine
/// input sampled at 401 points and the step input.
std::vector<PlotSeries> signal_traces(const ExperimentConfig& config);
std::string render_signals_svg(const ExperimentConfig& config);

// --- single run ------------------------------------------------------------

struct SingleRun {
    PararealRun run;
    Eigen::MatrixXd reference;
    std::optional<double> rho_num;
    double x_bound = 0.0;
    /// Dominant modulus of S, only for subintervals <= 1024.
    std::optional<double> rho_asym;
};

SingleRun run_single(const ExperimentConfig& config);
void write_iterates_csv(const SingleRun& result, std::ostream& out);

}  // namespace ppr
