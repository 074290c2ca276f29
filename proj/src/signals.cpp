#include "ppr/signals.hpp"

#include "ppr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace ppr {

namespace {

constexpr int kCellsPerTooth = 16;
constexpr int kMaxBisections = 200;

void require_finite(double t, const char* what) {
    if (!std::isfinite(t)) {
        throw InvalidArgument(std::string(what) + " must be finite");
    }
}

void require_period(double period) {
    if (!std::isfinite(period) || period <= 0.0) {
        throw InvalidArgument("period must be positive and finite");
    }
}

/// Phase t/T in [0, 1).
double phase_of(double t, double period) {
    double phase = reduce_to_period(t, period) / period;
    if (phase >= 1.0) {
        phase -= 1.0;
    }
    return phase;
}

double sign_of(double x) {
    return (x > 0.0) ? 1.0 : ((x < 0.0) ? -1.0 : 0.0);
}

/// Finds the sign change of g in [lo, hi] given g(lo) < 0 <= g(hi) (or the
/// mirror), to the resolution of double arithmetic.
template <typename G>
double bisect(const G& g, double lo, double hi) {
    const bool lo_negative = g(lo) < 0.0;
    for (int i = 0; i < kMaxBisections; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        if ((g(mid) < 0.0) == lo_negative) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

PiecewiseConstant build_pwm_pieces(const PwmSignal& pwm) {
    const double period = pwm.period();
    const int teeth = pwm.teeth();

    std::vector<double> candidates;
    candidates.reserve(static_cast<std::size_t>(teeth) * 3 + 2);
    candidates.push_back(0.0);
    candidates.push_back(0.5 * period);
    candidates.push_back(period);

    for (int j = 0; j < teeth; ++j) {
        const double a = period * j / teeth;
        const double b = period * (j + 1) / teeth;
        if (j > 0) {
            candidates.push_back(a);
        }
        // Within tooth j the carrier is the continuous ramp m t/T - j.
        const auto g = [&](double t) {
            return teeth * (t / period) - j - std::abs(sin_two_pi(t / period));
        };
        double left = a;
        double g_left = g(left);
        for (int c = 1; c <= kCellsPerTooth; ++c) {
            const double right = (c == kCellsPerTooth) ? b : a + (b - a) * c / kCellsPerTooth;
            const double g_right = g(right);
            if ((g_left < 0.0) != (g_right < 0.0)) {
                candidates.push_back(bisect(g, left, right));
            }
            left = right;
            g_left = g_right;
        }
    }

    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    PiecewiseConstant out;
    out.knots.push_back(candidates.front());
    for (std::size_t i = 0; i + 1 < candidates.size(); ++i) {
        const double value = pwm(0.5 * (candidates[i] + candidates[i + 1]));
        if (!out.values.empty() && out.values.back() == value) {
            out.knots.back() = candidates[i + 1];
        } else {
            out.values.push_back(value);
            out.knots.push_back(candidates[i + 1]);
        }
    }
    return out;
}

/// Carrier value and the phase to evaluate the sine at. A time within
/// round-off of a tooth boundary is moved onto the boundary, so that t and
/// t + kT agree there even when the sine vanishes at the same instant.
struct CarrierSample {
    double ramp;
    double phase;
};

CarrierSample sample_carrier(double t, double period, int teeth) {
    require_finite(t, "time");
    const double phase = phase_of(t, period);
    const double x = teeth * phase;
    const double nearest = std::round(x);
    // Round-off budget: forming t (a few ulps of |t|) plus the phase division.
    const double slack =
        4.0 * std::numeric_limits<double>::epsilon() * (x + teeth * std::abs(t) / period);
    if (std::abs(x - nearest) <= slack) {
        const double snapped = nearest / teeth;
        return {0.0, snapped >= 1.0 ? snapped - 1.0 : snapped};
    }
    return {x - std::floor(x), phase};
}

}  // namespace

double reduce_to_period(double t, double period) {
    if (t >= 0.0 && t <= period) {
        return t;
    }
    double r = std::fmod(t, period);
    if (r <= 0.0) {
        r += period;
    }
    return r;
}

double sin_two_pi(double phase) {
    double p = phase - std::floor(phase);
    if (p >= 0.5) {
        return -std::sin(2.0 * std::numbers::pi * (p - 0.5));
    }
    return std::sin(2.0 * std::numbers::pi * p);
}

// --- SawtoothCarrier -------------------------------------------------------

SawtoothCarrier::SawtoothCarrier(double period, int teeth) : period_(period), teeth_(teeth) {
    require_period(period);
    if (teeth < 1) {
        throw InvalidArgument("sawtooth needs at least one tooth");
    }
}

double SawtoothCarrier::operator()(double t) const {
    return sample_carrier(t, period_, teeth_).ramp;
}

double eval_sawtooth(double t, const SawtoothCarrier& carrier) { return carrier(t); }

// --- PwmSignal -------------------------------------------------------------

PwmSignal::PwmSignal(SawtoothCarrier carrier)
    : carrier_(carrier), cache_(std::make_shared<Cache>()) {}

PwmSignal::PwmSignal(double period, int teeth) : PwmSignal(SawtoothCarrier(period, teeth)) {}

double PwmSignal::operator()(double t) const {
    const auto [s, phase] = sample_carrier(t, carrier_.period(), carrier_.teeth());
    const double sn = sin_two_pi(phase);
    return (s - std::abs(sn) < 0.0) ? sign_of(sn) : 0.0;
}

const PiecewiseConstant& PwmSignal::pieces() const {
    std::call_once(cache_->once, [this] { cache_->pieces = build_pwm_pieces(*this); });
    return cache_->pieces;
}

std::vector<double> PwmSignal::breakpoints(double t0, double t1) const {
    require_finite(t0, "t0");
    require_finite(t1, "t1");
    if (t1 <= t0) {
        throw InvalidArgument("breakpoints: t1 must exceed t0");
    }
    if (t0 < 0.0 || t1 > period()) {
        throw InvalidArgument("breakpoints: interval must lie inside [0, T]");
    }
    const auto& knots = pieces().knots;
    auto first = std::upper_bound(knots.begin(), knots.end(), t0);
    auto last = std::lower_bound(knots.begin(), knots.end(), t1);
    std::vector<double> out(first, last);
    // The period ends are not switching instants of the periodic signal.
    std::erase_if(out, [&](double k) { return k <= 0.0 || k >= period(); });
    return out;
}

double eval_pwm(double t, const PwmSignal& pwm) { return pwm(t); }

// --- SmoothCoarseInput -----------------------------------------------------

std::string_view to_string(CoarseKind kind) {
    return kind == CoarseKind::sine ? "sine" : "step";
}

CoarseKind parse_coarse_kind(std::string_view name) {
    if (name == "sine") {
        return CoarseKind::sine;
    }
    if (name == "step") {
        return CoarseKind::step;
    }
    throw InvalidArgument("unknown coarse input kind '" + std::string(name) + "'");
}

SmoothCoarseInput::SmoothCoarseInput(CoarseKind kind, double period)
    : kind_(kind), period_(period) {
    require_period(period);
}

double SmoothCoarseInput::operator()(double t) const {
    require_finite(t, "time");
    const double r = reduce_to_period(t, period_);
    if (kind_ == CoarseKind::sine) {
        return sin_two_pi(r / period_);
    }
    return (r <= 0.5 * period_) ? 1.0 : -1.0;
}

PiecewiseConstant SmoothCoarseInput::pieces() const {
    if (kind_ != CoarseKind::step) {
        throw UnsupportedForcing("sine coarse input is not piecewise constant");
    }
    return {{0.0, 0.5 * period_, period_}, {1.0, -1.0}};
}

double eval_coarse_input(double t, const SmoothCoarseInput& input) { return input(t); }

double evaluate(const PeriodicSignal& signal, double t) {
    return std::visit(
        [t](const auto& s) -> double {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, ConstantSignal>) {
                return s.level;
            } else if constexpr (std::is_same_v<S, CustomSignal>) {
                return s.fn(reduce_to_period(t, s.period));
            } else {
                return s(t);
            }
        },
        signal);
}

}  // namespace ppr
