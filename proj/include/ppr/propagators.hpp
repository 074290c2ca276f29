#pragma once

// Fine and coarse propagators: maps (t0, t1, u0) -> u(t1). Each advance also
// reports how many linear systems it solved so Parareal can do cost
// accounting.

#include "ppr/problem.hpp"

#include <cstddef>
#include <memory>
#include <string_view>

namespace ppr {

enum class PropagatorKind { exact_linear, backward_euler };

std::string_view to_string(PropagatorKind kind);
PropagatorKind parse_propagator_kind(std::string_view name);

struct PropagatorSpec {
    PropagatorKind kind = PropagatorKind::exact_linear;
    /// Backward Euler step; must divide every interval it is asked to cover.
    double substep = 0.0;
    double newton_tol = 1e-12;
    int newton_max_iter = 25;

    void validate() const;
};

struct Advance {
    State state;
    std::size_t solves = 0;
};

class Propagator {
public:
    virtual ~Propagator() = default;

    [[nodiscard]] virtual Advance advance(double t0, double t1, const State& u0) const = 0;
    [[nodiscard]] virtual int dimension() const = 0;
};

/// Number of uniform steps of length ~substep covering [t0, t1]; the substep
/// must divide the interval to one part in 1e9.
long step_count(double t0, double t1, double substep);

// --- scalar closed forms ---------------------------------------------------

/// int_{t0}^{t1} exp(-kappa (t1 - s)) f(s) ds, in closed form for constant,
/// piecewise-constant (PWM, step) and sine forcings. `pieces` receives the
/// number of constant pieces crossed.
double exponential_convolution(const PeriodicSignal& forcing, double kappa, double t0, double t1,
                               std::size_t* pieces = nullptr);

/// e^{-kappa (t1-t0)} u0 + scale * int e^{-kappa (t1-s)} f(s) ds.
double exact_linear_propagate(double kappa, const PeriodicSignal& forcing, double scale,
                              double t0, double t1, double u0);

struct StabilityEvaluation {
    double z = 0.0;
    double value = 0.0;
    double exact_decay = 0.0;
    double defect = 0.0;  // |e^{-z} - phi(z)|
};

/// Backward Euler stability function 1 / (1 + z).
double stability_function_be(double z);
StabilityEvaluation evaluate_stability_be(double z);

// --- propagators -----------------------------------------------------------

/// Piecewise-exponential solution of u' + kappa u = scale f(t). Charges one
/// solve per constant piece it crosses.
class ExactLinearPropagator final : public Propagator {
public:
    ExactLinearPropagator(double kappa, PeriodicSignal forcing, double scale);

    [[nodiscard]] Advance advance(double t0, double t1, const State& u0) const override;
    [[nodiscard]] int dimension() const override { return 1; }

private:
    double kappa_;
    PeriodicSignal forcing_;
    double scale_;
};

/// Backward Euler for u' + kappa u = scale f(t), solved directly per step.
class ScalarBackwardEuler final : public Propagator {
public:
    ScalarBackwardEuler(double kappa, PeriodicSignal forcing, double scale, double substep);

    [[nodiscard]] Advance advance(double t0, double t1, const State& u0) const override;
    [[nodiscard]] int dimension() const override { return 1; }

private:
    double kappa_;
    PeriodicSignal forcing_;
    double scale_;
    double substep_;
};

enum class RhsChoice { full, smooth };

/// Backward Euler with Newton on a general problem.
class BackwardEulerPropagator final : public Propagator {
public:
    BackwardEulerPropagator(PeriodicODEProblem problem, RhsChoice rhs, PropagatorSpec spec);

    [[nodiscard]] Advance advance(double t0, double t1, const State& u0) const override;
    [[nodiscard]] int dimension() const override { return problem_.dimension; }

private:
    [[nodiscard]] Eigen::MatrixXd jacobian(double t, const State& u) const;

    PeriodicODEProblem problem_;
    RhsChoice rhs_;
    PropagatorSpec spec_;
};

/// Backward Euler over [t0, t1] with spec.substep (general problem).
Advance backward_euler_run(const PeriodicODEProblem& problem, double t0, double t1,
                           const State& u0, const PropagatorSpec& spec,
                           RhsChoice rhs = RhsChoice::full);

/// One Backward Euler step over [t_prev, t_next] on the smooth right-hand side.
Advance coarse_one_step(const PeriodicODEProblem& problem, double t_prev, double t_next,
                        const State& u0);
double coarse_one_step(const LinearScalarProblem& problem, double t_prev, double t_next,
                       double u0);

/// Fine propagator on the full forcing of a scalar problem.
std::unique_ptr<Propagator> make_fine_propagator(const LinearScalarProblem& problem,
                                                 const PropagatorSpec& spec);
/// Coarse propagator on the smooth forcing of a scalar problem.
std::unique_ptr<Propagator> make_coarse_propagator(const LinearScalarProblem& problem,
                                                   const PropagatorSpec& spec);
/// General problems support only Backward Euler.
std::unique_ptr<Propagator> make_propagator(const PeriodicODEProblem& problem, RhsChoice rhs,
                                            const PropagatorSpec& spec);

}  // namespace ppr
