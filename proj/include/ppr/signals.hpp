#pragma once

// T-periodic scalar excitations: the PWM source, its sawtooth carrier and the
// two smooth coarse surrogates (sine and step).

#include <functional>
#include <memory>
#include <mutex>
#include <string_view>
#include <variant>
#include <vector>

namespace ppr {

/// Maps t into [0, T]; values already inside are returned unchanged, values
/// outside land in (0, T] so that the closed right end of a period is kept.
double reduce_to_period(double t, double period);

/// sin(2*pi*phase) with exact zeros at integer and half-integer phases.
double sin_two_pi(double phase);

/// A piecewise-constant function over one period: values[j] holds on
/// (knots[j], knots[j+1]); knots.front() == 0 and knots.back() == T.
struct PiecewiseConstant {
    std::vector<double> knots;
    std::vector<double> values;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
};

class SawtoothCarrier {
public:
    SawtoothCarrier(double period, int teeth);

    [[nodiscard]] double period() const noexcept { return period_; }
    [[nodiscard]] int teeth() const noexcept { return teeth_; }

    /// s_m(t) = (m/T) t - floor((m/T) t), in [0, 1).
    [[nodiscard]] double operator()(double t) const;

private:
    double period_;
    int teeth_;
};

double eval_sawtooth(double t, const SawtoothCarrier& carrier);

/// Single-phase PWM: sign(sin(2 pi t/T)) where the carrier lies strictly below
/// |sin(2 pi t/T)|, zero elsewhere. Copies share one lazily built breakpoint
/// table.
class PwmSignal {
public:
    explicit PwmSignal(SawtoothCarrier carrier);
    PwmSignal(double period, int teeth);

    [[nodiscard]] double period() const noexcept { return carrier_.period(); }
    [[nodiscard]] int teeth() const noexcept { return carrier_.teeth(); }
    [[nodiscard]] const SawtoothCarrier& carrier() const noexcept { return carrier_; }

    [[nodiscard]] double operator()(double t) const;

    /// One period as constant pieces, switching instants located by bisection.
    [[nodiscard]] const PiecewiseConstant& pieces() const;

    /// Switching instants inside the open interval (t0, t1), 0 <= t0 < t1 <= T.
    [[nodiscard]] std::vector<double> breakpoints(double t0, double t1) const;

private:
    struct Cache {
        std::once_flag once;
        PiecewiseConstant pieces;
    };

    SawtoothCarrier carrier_;
    std::shared_ptr<Cache> cache_;
};

double eval_pwm(double t, const PwmSignal& pwm);

enum class CoarseKind { sine, step };

std::string_view to_string(CoarseKind kind);
CoarseKind parse_coarse_kind(std::string_view name);

/// Smooth low-frequency surrogate used by the coarse propagator.
class SmoothCoarseInput {
public:
    SmoothCoarseInput(CoarseKind kind, double period);

    [[nodiscard]] CoarseKind kind() const noexcept { return kind_; }
    [[nodiscard]] double period() const noexcept { return period_; }

    /// sine: sin(2 pi t/T); step: +1 on [0, T/2], -1 on (T/2, T].
    [[nodiscard]] double operator()(double t) const;

    /// Step only: {0, T/2, T} with values {+1, -1}.
    [[nodiscard]] PiecewiseConstant pieces() const;

private:
    CoarseKind kind_;
    double period_;
};

double eval_coarse_input(double t, const SmoothCoarseInput& input);

struct ConstantSignal {
    double level = 0.0;
};

/// Arbitrary user callable. Evaluable, but opaque to the exact propagator.
struct CustomSignal {
    double period = 1.0;
    std::function<double(double)> fn;
};

using PeriodicSignal = std::variant<ConstantSignal, PwmSignal, SmoothCoarseInput, CustomSignal>;

double evaluate(const PeriodicSignal& signal, double t);

}  // namespace ppr
