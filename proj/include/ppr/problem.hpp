#pragma once

// Time-periodic ODE problems u' = f(t, u) with the splitting
// f(t, u) = fbar(t, u) + ftilde(t): a smooth part the coarse solver sees and a
// u-independent discontinuous remainder.

#include "ppr/signals.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>

namespace ppr {

using State = Eigen::VectorXd;
using RhsFunction = std::function<State(double, const State&)>;
using JacobianFunction = std::function<Eigen::MatrixXd(double, const State&)>;

struct PeriodicODEProblem {
    int dimension = 1;
    double period = 1.0;
    RhsFunction full_rhs;
    RhsFunction smooth_rhs;
    /// d f / d u. Shared by both right-hand sides since the remainder does not
    /// depend on u. Finite differences are used when empty.
    JacobianFunction jacobian;
    /// Affine in u: implicit steps need exactly one linear solve.
    bool linear = false;

    void validate() const;
};

/// u' + kappa u = scale * f(t), with the coarse solver seeing scale * fbar(t).
struct LinearScalarProblem {
    double kappa = 1.0;
    PeriodicSignal forcing = ConstantSignal{};
    PeriodicSignal smooth_forcing = ConstantSignal{};
    double forcing_scale = 1.0;
    double period = 1.0;

    void validate() const;
    [[nodiscard]] PeriodicODEProblem as_ode() const;
};

/// R^{-1} phi' + L^{-1} phi = pwm(t) with a smooth coarse surrogate.
struct RLCircuitProblem {
    double resistance = 0.01;
    double inductance = 0.001;
    double period = 0.02;
    PwmSignal pwm{0.02, 400};
    SmoothCoarseInput coarse_input{CoarseKind::sine, 0.02};
};

/// Divides through by R^{-1}: kappa = R/L, forcing_scale = R.
LinearScalarProblem normalize_rl(const RLCircuitProblem& problem);

/// The paper-default RL circuit: R = 0.01, L = 0.001, T = 0.02, m = 400.
RLCircuitProblem default_rl_circuit(CoarseKind coarse = CoarseKind::sine, int teeth = 400);

/// ftilde(t) = f(t, u0) - fbar(t, u0) at the probe u0 (zero when omitted).
State split_rhs(const PeriodicODEProblem& problem, double t,
                const std::optional<State>& probe = std::nullopt);

/// Largest |f(0, v) - f(T, v)| over random probes v.
double periodic_compatibility_defect(const PeriodicODEProblem& problem, int probes,
                                     std::uint64_t seed = 1);

/// Largest |ftilde(t; u1) - ftilde(t; u2)| over random t, u1, u2.
double remainder_dependence(const PeriodicODEProblem& problem, int probes,
                            std::uint64_t seed = 1);

/// u' = -kappa (1 + 0.1 sin u) u + scale f(t): the nonlinear test problem.
PeriodicODEProblem make_nonlinear_test_problem(double kappa, PeriodicSignal forcing,
                                               PeriodicSignal smooth_forcing, double scale,
                                               double period);

}  // namespace ppr
