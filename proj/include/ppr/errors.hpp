#pragma once

#include <stdexcept>
#include <string>

namespace ppr {

/// Bad argument to a library entry point (non-finite time, non-positive
/// period, malformed spec, ...).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The exact propagator was handed a forcing whose pieces it cannot integrate
/// in closed form.
class UnsupportedForcing : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Newton failed inside an implicit step.
class PropagationFailure : public std::runtime_error {
public:
    PropagationFailure(double time, double residual)
        : std::runtime_error("Newton did not converge at t=" + std::to_string(time) +
                             " (residual " + std::to_string(residual) + ")"),
          time_(time),
          residual_(residual) {}

    [[nodiscard]] double time() const noexcept { return time_; }
    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    double time_;
    double residual_;
};

/// The contraction condition fails, so the x_l bound says nothing.
class BoundInapplicable : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Power iteration hit its cap without settling.
class EstimationFailure : public std::runtime_error {
public:
    EstimationFailure(double previous, double last)
        : std::runtime_error("spectral radius estimate did not settle (" +
                             std::to_string(previous) + ", " + std::to_string(last) + ")"),
          previous_(previous),
          last_(last) {}

    [[nodiscard]] double previous() const noexcept { return previous_; }
    [[nodiscard]] double last() const noexcept { return last_; }

private:
    double previous_;
    double last_;
};

/// Convergence-factor ratio with a zero initial error.
class UndefinedRatio : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// kappa <= 0: the periodic problem has no unique solution.
class NoPeriodicSolution : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ppr
