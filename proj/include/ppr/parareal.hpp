#pragma once

// Periodic Parareal with reduced coarse dynamics (PP-IC: the coarse problem is
// an initial-value problem and periodicity is relaxed through
// U_0^{k+1} = U_N^k), plus the two baselines it is measured against:
// classical Parareal on an initial-value problem over several periods, and
// plain sequential time stepping to the steady state.

#include "ppr/propagators.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <vector>

namespace ppr {

struct PararealConfig {
    int subintervals = 1;
    int max_iterations = 100;
    /// Both residuals (interior jumps and periodicity) must drop to this
    /// value, infinity norm, absolute.
    double tolerance = 1e-8;
    /// U_0^(0); zero of the propagator's dimension when empty.
    State initial_guess;
    PropagatorSpec fine_spec;
    PropagatorSpec coarse_spec{PropagatorKind::backward_euler};
    /// Threads for the fine solves; results do not depend on it.
    int workers = 1;

    void validate() const;
};

/// Work counted in linear-system solves.
struct CostLedger {
    std::size_t fine_solves_total = 0;
    /// Per iteration only the slowest subinterval counts (they run
    /// concurrently), summed over iterations.
    std::size_t fine_solves_effective = 0;
    std::size_t coarse_solves_sequential = 0;
    std::size_t iterations = 0;

    /// Effective fine work plus sequential coarse work. Without parallel
    /// accounting every fine solve counts.
    [[nodiscard]] std::size_t effective_solves(bool parallel_accounting = true) const;
    [[nodiscard]] std::size_t total_solves() const;
};

struct PararealRun {
    /// Synchronization points T_0..T_N.
    std::vector<double> times;
    /// iterates[k] is dimension x (N+1); column n holds U_n^(k).
    std::vector<Eigen::MatrixXd> iterates;
    /// Max over n = 1..N-1 of |F(T_n, T_{n-1}, U_{n-1}^(k)) - U_n^(k)|; the
    /// classical variant also includes n = N.
    std::vector<double> jump_history;
    /// |U_N^(k) - U_0^(k)| (PP-IC only).
    std::vector<double> periodicity_history;
    /// F(T_N, T_{N-1}, U_{N-1}^(k)) of the last recorded iteration.
    State final_fine_state;
    CostLedger cost;
    std::optional<int> converged_at;

    [[nodiscard]] int subintervals() const { return static_cast<int>(times.size()) - 1; }
    [[nodiscard]] int last_iteration() const { return static_cast<int>(iterates.size()) - 1; }
    [[nodiscard]] const Eigen::MatrixXd& iterate(int k) const { return iterates.at(k); }
};

/// Uniform synchronization points over [0, horizon].
std::vector<double> uniform_times(double horizon, int subintervals);

/// U_0 = guess, U_n = G(T_n, T_{n-1}, U_{n-1}); N coarse solves charged.
Eigen::MatrixXd coarse_initialize(const Propagator& coarse, const std::vector<double>& times,
                                  const State& guess, CostLedger& ledger);

/// The sequential update U_n^new = F_n + G(U_{n-1}^new) - G_n^old for
/// n = 1..N starting from `start`. Column n-1 of `fine_values` and
/// `coarse_old` belongs to subinterval n; `coarse_old` is overwritten with the
/// fresh coarse values.
Eigen::MatrixXd correction_sweep(const Propagator& coarse, const std::vector<double>& times,
                                 const State& start, const Eigen::MatrixXd& fine_values,
                                 Eigen::MatrixXd& coarse_old, CostLedger& ledger);

PararealRun pp_ic_solve(const Propagator& fine, const Propagator& coarse, double period,
                        const PararealConfig& config);
PararealRun pp_ic_solve(const LinearScalarProblem& problem, const PararealConfig& config);
PararealRun pp_ic_solve(const PeriodicODEProblem& problem, const PararealConfig& config);

/// Standard Parareal from the fixed initial value config.initial_guess over
/// [0, horizon] with config.subintervals subintervals.
PararealRun classical_parareal_ivp_solve(const Propagator& fine, const Propagator& coarse,
                                         double horizon, const PararealConfig& config);
PararealRun classical_parareal_ivp_solve(const LinearScalarProblem& problem, double horizon,
                                         const PararealConfig& config);

double jump_residual(const PararealRun& run, int k);

struct SteadyStateResult {
    /// u(kT) for k = 0..periods_used.
    std::vector<State> period_starts;
    int periods_used = 0;
    bool converged = false;
    CostLedger cost;

    [[nodiscard]] const State& final_state() const { return period_starts.back(); }
};

/// Integrates period by period until
/// |u(kT) - u((k-1)T)|_inf / max(1, |u(kT)|_inf) <= steady_tol.
SteadyStateResult sequential_steady_state(const Propagator& fine, double period,
                                          double steady_tol, int max_periods,
                                          const std::optional<State>& initial = std::nullopt);

}  // namespace ppr
