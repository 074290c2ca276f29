#include "ppr/parareal.hpp"

#include "ppr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

namespace ppr {

namespace {

struct FineSweep {
    Eigen::MatrixXd values;  // dimension x N, column n-1 is F over [T_{n-1}, T_n]
    std::size_t total = 0;
    std::size_t slowest = 0;
};

/// Runs the N independent fine solves from the columns 0..N-1 of `iterate`.
/// Each task writes only its own slot, so the result does not depend on the
/// worker count.
FineSweep fine_sweep(const Propagator& fine, const std::vector<double>& times,
                     const Eigen::MatrixXd& iterate, int workers) {
    const int n_sub = static_cast<int>(times.size()) - 1;
    std::vector<Advance> results(static_cast<std::size_t>(n_sub));

    const auto work = [&](int begin, int end) {
        for (int n = begin; n < end; ++n) {
            results[static_cast<std::size_t>(n)] =
                fine.advance(times[n], times[n + 1], iterate.col(n));
        }
    };

    const int threads = std::clamp(workers, 1, n_sub);
    if (threads == 1) {
        work(0, n_sub);
    } else {
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int w = 0; w < threads; ++w) {
            const int begin = static_cast<int>(static_cast<long>(n_sub) * w / threads);
            const int end = static_cast<int>(static_cast<long>(n_sub) * (w + 1) / threads);
            pool.emplace_back([&, w, begin, end] {
                try {
                    work(begin, end);
                } catch (...) {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
        for (const auto& e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
    }

    FineSweep out;
    out.values.resize(iterate.rows(), n_sub);
    for (int n = 0; n < n_sub; ++n) {
        const auto& r = results[static_cast<std::size_t>(n)];
        out.values.col(n) = r.state;
        out.total += r.solves;
        out.slowest = std::max(out.slowest, r.solves);
    }
    return out;
}

double max_jump(const FineSweep& sweep, const Eigen::MatrixXd& iterate, int last_point) {
    double worst = 0.0;
    for (int n = 1; n <= last_point; ++n) {
        worst = std::max(worst,
                         (sweep.values.col(n - 1) - iterate.col(n)).lpNorm<Eigen::Infinity>());
    }
    return worst;
}

State resolve_guess(const PararealConfig& config, int dimension) {
    if (config.initial_guess.size() == 0) {
        return State::Zero(dimension);
    }
    if (config.initial_guess.size() != dimension) {
        throw InvalidArgument("initial guess has the wrong dimension");
    }
    return config.initial_guess;
}

enum class Closure { periodic, initial_value };

PararealRun parareal_loop(const Propagator& fine, const Propagator& coarse, double horizon,
                          const PararealConfig& config, Closure closure) {
    config.validate();
    if (fine.dimension() != coarse.dimension()) {
        throw InvalidArgument("fine and coarse propagators disagree on the dimension");
    }
    const int n_sub = config.subintervals;

    PararealRun run;
    run.times = uniform_times(horizon, n_sub);
    const State guess = resolve_guess(config, fine.dimension());

    Eigen::MatrixXd current = coarse_initialize(coarse, run.times, guess, run.cost);
    // G(T_n, T_{n-1}, U_{n-1}^(0)) is exactly U_n^(0).
    Eigen::MatrixXd coarse_old = current.rightCols(n_sub);
    run.iterates.push_back(current);

    // PP-IC measures jumps at interior points and closes the loop through the
    // periodicity residual; the initial-value variant also checks T_N.
    const int last_point = (closure == Closure::periodic) ? n_sub - 1 : n_sub;

    for (int k = 0;; ++k) {
        const FineSweep sweep = fine_sweep(fine, run.times, current, config.workers);
        run.cost.fine_solves_total += sweep.total;
        run.cost.fine_solves_effective += sweep.slowest;
        run.final_fine_state = sweep.values.col(n_sub - 1);

        const double jump = max_jump(sweep, current, last_point);
        run.jump_history.push_back(jump);
        double periodicity = 0.0;
        if (closure == Closure::periodic) {
            periodicity = (current.col(n_sub) - current.col(0)).lpNorm<Eigen::Infinity>();
            run.periodicity_history.push_back(periodicity);
        }

        if (jump <= config.tolerance && periodicity <= config.tolerance) {
            run.converged_at = k;
            break;
        }
        if (k >= config.max_iterations) {
            break;
        }

        const State start =
            (closure == Closure::periodic) ? State(current.col(n_sub)) : State(current.col(0));
        current = correction_sweep(coarse, run.times, start, sweep.values, coarse_old, run.cost);
        run.iterates.push_back(current);
        ++run.cost.iterations;
    }
    return run;
}

}  // namespace

void PararealConfig::validate() const {
    if (subintervals < 1) {
        throw InvalidArgument("Parareal needs at least one subinterval");
    }
    if (max_iterations < 0) {
        throw InvalidArgument("max_iterations must be non-negative");
    }
    if (!(tolerance > 0.0)) {
        throw InvalidArgument("tolerance must be positive");
    }
    if (workers < 1) {
        throw InvalidArgument("workers must be at least 1");
    }
}

std::size_t CostLedger::effective_solves(bool parallel_accounting) const {
    return (parallel_accounting ? fine_solves_effective : fine_solves_total) +
           coarse_solves_sequential;
}

std::size_t CostLedger::total_solves() const {
    return fine_solves_total + coarse_solves_sequential;
}

std::vector<double> uniform_times(double horizon, int subintervals) {
    if (subintervals < 1 || !(horizon > 0.0)) {
        throw InvalidArgument("uniform_times needs a positive horizon and count");
    }
    std::vector<double> t(static_cast<std::size_t>(subintervals) + 1);
    for (int n = 0; n <= subintervals; ++n) {
        t[static_cast<std::size_t>(n)] = horizon * n / subintervals;
    }
    t.back() = horizon;
    return t;
}

Eigen::MatrixXd coarse_initialize(const Propagator& coarse, const std::vector<double>& times,
                                  const State& guess, CostLedger& ledger) {
    const int n_sub = static_cast<int>(times.size()) - 1;
    Eigen::MatrixXd u(guess.size(), n_sub + 1);
    u.col(0) = guess;
    for (int n = 1; n <= n_sub; ++n) {
        Advance a = coarse.advance(times[n - 1], times[n], u.col(n - 1));
        u.col(n) = a.state;
        ledger.coarse_solves_sequential += a.solves;
    }
    return u;
}

Eigen::MatrixXd correction_sweep(const Propagator& coarse, const std::vector<double>& times,
                                 const State& start, const Eigen::MatrixXd& fine_values,
                                 Eigen::MatrixXd& coarse_old, CostLedger& ledger) {
    const int n_sub = static_cast<int>(times.size()) - 1;
    Eigen::MatrixXd next(start.size(), n_sub + 1);
    next.col(0) = start;
    for (int n = 1; n <= n_sub; ++n) {
        Advance fresh = coarse.advance(times[n - 1], times[n], next.col(n - 1));
        ledger.coarse_solves_sequential += fresh.solves;
        next.col(n) = fine_values.col(n - 1) + fresh.state - coarse_old.col(n - 1);
        coarse_old.col(n - 1) = fresh.state;
    }
    return next;
}

PararealRun pp_ic_solve(const Propagator& fine, const Propagator& coarse, double period,
                        const PararealConfig& config) {
    return parareal_loop(fine, coarse, period, config, Closure::periodic);
}

PararealRun pp_ic_solve(const LinearScalarProblem& problem, const PararealConfig& config) {
    const auto fine = make_fine_propagator(problem, config.fine_spec);
    const auto coarse = make_coarse_propagator(problem, config.coarse_spec);
    return pp_ic_solve(*fine, *coarse, problem.period, config);
}

PararealRun pp_ic_solve(const PeriodicODEProblem& problem, const PararealConfig& config) {
    const auto fine = make_propagator(problem, RhsChoice::full, config.fine_spec);
    const auto coarse = make_propagator(problem, RhsChoice::smooth, config.coarse_spec);
    return pp_ic_solve(*fine, *coarse, problem.period, config);
}

PararealRun classical_parareal_ivp_solve(const Propagator& fine, const Propagator& coarse,
                                         double horizon, const PararealConfig& config) {
    return parareal_loop(fine, coarse, horizon, config, Closure::initial_value);
}

PararealRun classical_parareal_ivp_solve(const LinearScalarProblem& problem, double horizon,
                                         const PararealConfig& config) {
    const double periods = horizon / problem.period;
    if (periods < 1.0 - 1e-12 || std::abs(periods - std::round(periods)) > 1e-9) {
        throw InvalidArgument("horizon must be a positive whole number of periods");
    }
    const auto fine = make_fine_propagator(problem, config.fine_spec);
    const auto coarse = make_coarse_propagator(problem, config.coarse_spec);
    return classical_parareal_ivp_solve(*fine, *coarse, horizon, config);
}

double jump_residual(const PararealRun& run, int k) {
    return run.jump_history.at(static_cast<std::size_t>(k));
}

SteadyStateResult sequential_steady_state(const Propagator& fine, double period,
                                          double steady_tol, int max_periods,
                                          const std::optional<State>& initial) {
    if (!(steady_tol > 0.0)) {
        throw InvalidArgument("steady_tol must be positive");
    }
    if (max_periods < 1) {
        throw InvalidArgument("max_periods must be at least 1");
    }
    SteadyStateResult out;
    State u = initial.value_or(State::Zero(fine.dimension()));
    out.period_starts.push_back(u);
    for (int k = 1; k <= max_periods; ++k) {
        Advance a = fine.advance((k - 1) * period, k * period, u);
        out.cost.fine_solves_total += a.solves;
        out.cost.fine_solves_effective += a.solves;
        const double change = (a.state - u).lpNorm<Eigen::Infinity>();
        const double size = std::max(1.0, a.state.lpNorm<Eigen::Infinity>());
        u = std::move(a.state);
        out.period_starts.push_back(u);
        out.periods_used = k;
        if (change / size <= steady_tol) {
            out.converged = true;
            break;
        }
    }
    out.cost.iterations = static_cast<std::size_t>(out.periods_used);
    return out;
}

}  // namespace ppr
