#include "ppr/problem.hpp"

#include "ppr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ppr {

void PeriodicODEProblem::validate() const {
    if (dimension < 1) {
        throw InvalidArgument("problem dimension must be positive");
    }
    if (!std::isfinite(period) || period <= 0.0) {
        throw InvalidArgument("problem period must be positive");
    }
    if (!full_rhs || !smooth_rhs) {
        throw InvalidArgument("problem needs both full and smooth right-hand sides");
    }
}

void LinearScalarProblem::validate() const {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) {
        throw InvalidArgument("kappa must be positive");
    }
    if (!std::isfinite(period) || period <= 0.0) {
        throw InvalidArgument("problem period must be positive");
    }
    if (!std::isfinite(forcing_scale)) {
        throw InvalidArgument("forcing scale must be finite");
    }
}

PeriodicODEProblem LinearScalarProblem::as_ode() const {
    validate();
    PeriodicODEProblem ode;
    ode.dimension = 1;
    ode.period = period;
    ode.linear = true;
    ode.full_rhs = [k = kappa, f = forcing, s = forcing_scale](double t, const State& u) {
        return State::Constant(1, -k * u(0) + s * evaluate(f, t));
    };
    ode.smooth_rhs = [k = kappa, f = smooth_forcing, s = forcing_scale](double t,
                                                                        const State& u) {
        return State::Constant(1, -k * u(0) + s * evaluate(f, t));
    };
    ode.jacobian = [k = kappa](double, const State&) {
        return Eigen::MatrixXd::Constant(1, 1, -k);
    };
    return ode;
}

LinearScalarProblem normalize_rl(const RLCircuitProblem& problem) {
    if (!(problem.resistance > 0.0) || !(problem.inductance > 0.0)) {
        throw InvalidArgument("resistance and inductance must be positive");
    }
    LinearScalarProblem out;
    out.kappa = problem.resistance / problem.inductance;
    out.forcing_scale = problem.resistance;
    out.period = problem.period;
    out.forcing = problem.pwm;
    out.smooth_forcing = problem.coarse_input;
    return out;
}

RLCircuitProblem default_rl_circuit(CoarseKind coarse, int teeth) {
    RLCircuitProblem p;
    p.pwm = PwmSignal(p.period, teeth);
    p.coarse_input = SmoothCoarseInput(coarse, p.period);
    return p;
}

State split_rhs(const PeriodicODEProblem& problem, double t, const std::optional<State>& probe) {
    const State u = probe.value_or(State::Zero(problem.dimension));
    return problem.full_rhs(t, u) - problem.smooth_rhs(t, u);
}

double periodic_compatibility_defect(const PeriodicODEProblem& problem, int probes,
                                     std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    double worst = 0.0;
    for (int i = 0; i < probes; ++i) {
        State v(problem.dimension);
        for (auto& x : v) {
            x = normal(rng);
        }
        const State d = problem.full_rhs(0.0, v) - problem.full_rhs(problem.period, v);
        worst = std::max(worst, d.lpNorm<Eigen::Infinity>());
    }
    return worst;
}

double remainder_dependence(const PeriodicODEProblem& problem, int probes, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> when(0.0, problem.period);
    double worst = 0.0;
    for (int i = 0; i < probes; ++i) {
        State u1(problem.dimension);
        State u2(problem.dimension);
        for (int j = 0; j < problem.dimension; ++j) {
            u1(j) = normal(rng);
            u2(j) = normal(rng);
        }
        const double t = when(rng);
        const State d = split_rhs(problem, t, u1) - split_rhs(problem, t, u2);
        worst = std::max(worst, d.lpNorm<Eigen::Infinity>());
    }
    return worst;
}

PeriodicODEProblem make_nonlinear_test_problem(double kappa, PeriodicSignal forcing,
                                               PeriodicSignal smooth_forcing, double scale,
                                               double period) {
    if (!(kappa > 0.0)) {
        throw InvalidArgument("kappa must be positive");
    }
    PeriodicODEProblem ode;
    ode.dimension = 1;
    ode.period = period;
    const auto drift = [kappa](double u) { return -kappa * (1.0 + 0.1 * std::sin(u)) * u; };
    ode.full_rhs = [drift, f = std::move(forcing), scale](double t, const State& u) {
        return State::Constant(1, drift(u(0)) + scale * evaluate(f, t));
    };
    ode.smooth_rhs = [drift, f = std::move(smooth_forcing), scale](double t, const State& u) {
        return State::Constant(1, drift(u(0)) + scale * evaluate(f, t));
    };
    ode.jacobian = [kappa](double, const State& u) {
        const double x = u(0);
        return Eigen::MatrixXd::Constant(
            1, 1, -kappa * (1.0 + 0.1 * std::sin(x) + 0.1 * x * std::cos(x)));
    };
    ode.validate();
    return ode;
}

}  // namespace ppr
