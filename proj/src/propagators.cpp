#include "ppr/propagators.hpp"

#include "ppr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace ppr {

namespace {

/// Integral of exp(-kappa (t1 - s)) over [a, b], b <= t1.
double decay_weight(double kappa, double a, double b, double t1) {
    return std::exp(-kappa * (t1 - b)) * (-std::expm1(-kappa * (b - a))) / kappa;
}

double piecewise_convolution(const PiecewiseConstant& pc, double period, double kappa, double t0,
                             double t1, std::size_t* pieces) {
    double cycles = std::floor(t0 / period);
    double local = t0 - cycles * period;
    if (local >= period) {
        local -= period;
        cycles += 1.0;
    } else if (local < 0.0) {
        local += period;
        cycles -= 1.0;
    }
    const auto& knots = pc.knots;
    std::size_t j = static_cast<std::size_t>(
        std::upper_bound(knots.begin(), knots.end(), local) - knots.begin());
    j = std::clamp<std::size_t>(j, 1, pc.size()) - 1;

    double base = cycles * period;
    double a = t0;
    double acc = 0.0;
    std::size_t count = 0;
    while (a < t1) {
        const double end = std::min(t1, base + knots[j + 1]);
        if (end > a) {
            acc += pc.values[j] * decay_weight(kappa, a, end, t1);
            ++count;
            a = end;
        }
        if (++j == pc.size()) {
            j = 0;
            base += period;
        }
    }
    if (pieces != nullptr) {
        *pieces = count;
    }
    return acc;
}

/// Closed form of int_{t0}^{t1} exp(-kappa (t1-s)) sin(2 pi s / T) ds.
double sine_convolution(double period, double kappa, double t0, double t1) {
    const double omega = 2.0 * std::numbers::pi / period;
    const auto primitive = [&](double t) {
        const double phase = t / period;
        return kappa * sin_two_pi(phase) - omega * sin_two_pi(phase + 0.25);
    };
    return (primitive(t1) - std::exp(-kappa * (t1 - t0)) * primitive(t0)) /
           (kappa * kappa + omega * omega);
}

template <typename F>
double run_scalar_be(const F& forcing, double kappa, double scale, double t0, double t1,
                     long steps, double u) {
    const double h = (t1 - t0) / static_cast<double>(steps);
    const double amplification = 1.0 / (1.0 + kappa * h);
    const double gain = h * scale;
    for (long j = 1; j <= steps; ++j) {
        const double t = (j == steps) ? t1 : t0 + static_cast<double>(j) * h;
        u = (u + gain * forcing(t)) * amplification;
    }
    return u;
}

}  // namespace

std::string_view to_string(PropagatorKind kind) {
    return kind == PropagatorKind::exact_linear ? "exact" : "backward_euler";
}

PropagatorKind parse_propagator_kind(std::string_view name) {
    if (name == "exact" || name == "exact_linear") {
        return PropagatorKind::exact_linear;
    }
    if (name == "backward_euler" || name == "be") {
        return PropagatorKind::backward_euler;
    }
    throw InvalidArgument("unknown propagator kind '" + std::string(name) + "'");
}

void PropagatorSpec::validate() const {
    if (kind == PropagatorKind::backward_euler && !(substep > 0.0)) {
        throw InvalidArgument("backward Euler needs a positive substep");
    }
    if (!(newton_tol > 0.0)) {
        throw InvalidArgument("newton_tol must be positive");
    }
    if (newton_max_iter < 1) {
        throw InvalidArgument("newton_max_iter must be at least 1");
    }
}

long step_count(double t0, double t1, double substep) {
    const double h = t1 - t0;
    if (!(h > 0.0)) {
        throw InvalidArgument("propagation interval must have t1 > t0");
    }
    if (!(substep > 0.0)) {
        throw InvalidArgument("substep must be positive");
    }
    const long n = std::max(1L, std::lround(h / substep));
    if (std::abs(static_cast<double>(n) * substep - h) > 1e-9 * h) {
        throw InvalidArgument("substep " + std::to_string(substep) +
                              " does not divide the interval length " + std::to_string(h));
    }
    return n;
}

double exponential_convolution(const PeriodicSignal& forcing, double kappa, double t0, double t1,
                               std::size_t* pieces) {
    if (!(t1 > t0)) {
        throw InvalidArgument("propagation interval must have t1 > t0");
    }
    return std::visit(
        [&](const auto& s) -> double {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, ConstantSignal>) {
                if (pieces != nullptr) {
                    *pieces = 1;
                }
                return s.level * decay_weight(kappa, t0, t1, t1);
            } else if constexpr (std::is_same_v<S, PwmSignal>) {
                return piecewise_convolution(s.pieces(), s.period(), kappa, t0, t1, pieces);
            } else if constexpr (std::is_same_v<S, SmoothCoarseInput>) {
                if (s.kind() == CoarseKind::step) {
                    return piecewise_convolution(s.pieces(), s.period(), kappa, t0, t1, pieces);
                }
                if (pieces != nullptr) {
                    *pieces = 1;
                }
                return sine_convolution(s.period(), kappa, t0, t1);
            } else {
                throw UnsupportedForcing("exact propagation needs a forcing with known pieces");
            }
        },
        forcing);
}

double exact_linear_propagate(double kappa, const PeriodicSignal& forcing, double scale,
                              double t0, double t1, double u0) {
    return std::exp(-kappa * (t1 - t0)) * u0 +
           scale * exponential_convolution(forcing, kappa, t0, t1);
}

double stability_function_be(double z) {
    if (z == -1.0) {
        throw std::domain_error("stability function 1/(1+z) is singular at z = -1");
    }
    return 1.0 / (1.0 + z);
}

StabilityEvaluation evaluate_stability_be(double z) {
    StabilityEvaluation e;
    e.z = z;
    e.value = stability_function_be(z);
    e.exact_decay = std::exp(-z);
    e.defect = std::abs(e.exact_decay - e.value);
    return e;
}

// --- ExactLinearPropagator -------------------------------------------------

ExactLinearPropagator::ExactLinearPropagator(double kappa, PeriodicSignal forcing, double scale)
    : kappa_(kappa), forcing_(std::move(forcing)), scale_(scale) {
    if (!(kappa > 0.0)) {
        throw InvalidArgument("kappa must be positive");
    }
    if (std::holds_alternative<CustomSignal>(forcing_)) {
        throw UnsupportedForcing("exact propagation needs a forcing with known pieces");
    }
}

Advance ExactLinearPropagator::advance(double t0, double t1, const State& u0) const {
    std::size_t pieces = 0;
    const double conv = exponential_convolution(forcing_, kappa_, t0, t1, &pieces);
    Advance out;
    out.state = State::Constant(1, std::exp(-kappa_ * (t1 - t0)) * u0(0) + scale_ * conv);
    out.solves = pieces;
    return out;
}

// --- ScalarBackwardEuler ---------------------------------------------------

ScalarBackwardEuler::ScalarBackwardEuler(double kappa, PeriodicSignal forcing, double scale,
                                         double substep)
    : kappa_(kappa), forcing_(std::move(forcing)), scale_(scale), substep_(substep) {
    if (!(kappa > 0.0)) {
        throw InvalidArgument("kappa must be positive");
    }
    if (!(substep > 0.0)) {
        throw InvalidArgument("backward Euler needs a positive substep");
    }
}

Advance ScalarBackwardEuler::advance(double t0, double t1, const State& u0) const {
    const long steps = step_count(t0, t1, substep_);
    const double u = std::visit(
        [&](const auto& s) -> double {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, ConstantSignal>) {
                return run_scalar_be([&](double) { return s.level; }, kappa_, scale_, t0, t1,
                                     steps, u0(0));
            } else if constexpr (std::is_same_v<S, CustomSignal>) {
                return run_scalar_be(
                    [&](double t) { return s.fn(reduce_to_period(t, s.period)); }, kappa_,
                    scale_, t0, t1, steps, u0(0));
            } else {
                return run_scalar_be(s, kappa_, scale_, t0, t1, steps, u0(0));
            }
        },
        forcing_);
    return {State::Constant(1, u), static_cast<std::size_t>(steps)};
}

// --- BackwardEulerPropagator -----------------------------------------------

BackwardEulerPropagator::BackwardEulerPropagator(PeriodicODEProblem problem, RhsChoice rhs,
                                                 PropagatorSpec spec)
    : problem_(std::move(problem)), rhs_(rhs), spec_(spec) {
    problem_.validate();
    spec_.validate();
    if (spec_.kind != PropagatorKind::backward_euler) {
        throw InvalidArgument("general problems are propagated with backward Euler only");
    }
}

Eigen::MatrixXd BackwardEulerPropagator::jacobian(double t, const State& u) const {
    if (problem_.jacobian) {
        return problem_.jacobian(t, u);
    }
    const auto& f = (rhs_ == RhsChoice::full) ? problem_.full_rhs : problem_.smooth_rhs;
    const State f0 = f(t, u);
    Eigen::MatrixXd jac(problem_.dimension, problem_.dimension);
    for (int j = 0; j < problem_.dimension; ++j) {
        const double h = 1e-7 * std::max(1.0, std::abs(u(j)));
        State probe = u;
        probe(j) += h;
        jac.col(j) = (f(t, probe) - f0) / h;
    }
    return jac;
}

Advance BackwardEulerPropagator::advance(double t0, double t1, const State& u0) const {
    const long steps = step_count(t0, t1, spec_.substep);
    const double h = (t1 - t0) / static_cast<double>(steps);
    const auto& f = (rhs_ == RhsChoice::full) ? problem_.full_rhs : problem_.smooth_rhs;
    const auto identity = Eigen::MatrixXd::Identity(problem_.dimension, problem_.dimension);

    Advance out;
    State u = u0;
    for (long j = 1; j <= steps; ++j) {
        const double t = (j == steps) ? t1 : t0 + static_cast<double>(j) * h;
        const State previous = u;
        for (int it = 1;; ++it) {
            const State residual = u - previous - h * f(t, u);
            const Eigen::MatrixXd system = identity - h * jacobian(t, u);
            const State update = system.partialPivLu().solve(-residual);
            u += update;
            ++out.solves;
            if (problem_.linear || update.lpNorm<Eigen::Infinity>() <= spec_.newton_tol) {
                break;
            }
            if (it >= spec_.newton_max_iter) {
                const State r = u - previous - h * f(t, u);
                throw PropagationFailure(t, r.lpNorm<Eigen::Infinity>());
            }
        }
    }
    out.state = std::move(u);
    return out;
}

Advance backward_euler_run(const PeriodicODEProblem& problem, double t0, double t1,
                           const State& u0, const PropagatorSpec& spec, RhsChoice rhs) {
    return BackwardEulerPropagator(problem, rhs, spec).advance(t0, t1, u0);
}

Advance coarse_one_step(const PeriodicODEProblem& problem, double t_prev, double t_next,
                        const State& u0) {
    PropagatorSpec spec;
    spec.kind = PropagatorKind::backward_euler;
    spec.substep = t_next - t_prev;
    return backward_euler_run(problem, t_prev, t_next, u0, spec, RhsChoice::smooth);
}

double coarse_one_step(const LinearScalarProblem& problem, double t_prev, double t_next,
                       double u0) {
    const double dt = t_next - t_prev;
    if (!(dt > 0.0)) {
        throw InvalidArgument("coarse step needs t_next > t_prev");
    }
    const double xi = dt * problem.forcing_scale * evaluate(problem.smooth_forcing, t_next) /
                      (1.0 + problem.kappa * dt);
    return stability_function_be(problem.kappa * dt) * u0 + xi;
}

namespace {

std::unique_ptr<Propagator> make_scalar(const LinearScalarProblem& problem,
                                        const PeriodicSignal& forcing,
                                        const PropagatorSpec& spec) {
    problem.validate();
    spec.validate();
    if (spec.kind == PropagatorKind::exact_linear) {
        return std::make_unique<ExactLinearPropagator>(problem.kappa, forcing,
                                                       problem.forcing_scale);
    }
    return std::make_unique<ScalarBackwardEuler>(problem.kappa, forcing, problem.forcing_scale,
                                                 spec.substep);
}

}  // namespace

std::unique_ptr<Propagator> make_fine_propagator(const LinearScalarProblem& problem,
                                                 const PropagatorSpec& spec) {
    return make_scalar(problem, problem.forcing, spec);
}

std::unique_ptr<Propagator> make_coarse_propagator(const LinearScalarProblem& problem,
                                                   const PropagatorSpec& spec) {
    return make_scalar(problem, problem.smooth_forcing, spec);
}

std::unique_ptr<Propagator> make_propagator(const PeriodicODEProblem& problem, RhsChoice rhs,
                                            const PropagatorSpec& spec) {
    return std::make_unique<BackwardEulerPropagator>(problem, rhs, spec);
}

}  // namespace ppr
