#include "catch_amalgamated.hpp"

#include "oracles.hpp"
#include "ppr/errors.hpp"
#include "ppr/problem.hpp"
#include "ppr/propagators.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace ppr;
using Catch::Approx;

namespace {

constexpr double kT = 0.02;
constexpr double kKappa = 10.0;
constexpr double kScale = 0.01;

LinearScalarProblem rl(CoarseKind kind = CoarseKind::sine) {
    return normalize_rl(default_rl_circuit(kind));
}

// Relative error of the BE solution against the exact one over [0, T] with
// sine forcing, 2^e steps.
double be_error(int e) {
    const SmoothCoarseInput sine(CoarseKind::sine, kT);
    const double exact = exact_linear_propagate(kKappa, sine, kScale, 0.0, kT, 0.0);
    const double be = oracle::backward_euler(sine, kKappa, kScale, 0.0, kT, 1L << e, 0.0);
    return std::abs(be - exact);
}

}  // namespace

TEST_CASE("exact propagator: free decay and constant equilibrium", "[propagators]") {
    CHECK(exact_linear_propagate(kKappa, ConstantSignal{0.0}, kScale, 0.0, 0.1, 2.0) ==
          Approx(2.0 * std::exp(-1.0)).epsilon(1e-15));
    const double c = 3.0;
    const double eq = c * kScale / kKappa;
    CHECK(exact_linear_propagate(kKappa, ConstantSignal{c}, kScale, 0.013, 0.5, eq) ==
          Approx(eq).epsilon(1e-14));
}

TEST_CASE("exact propagator with PWM agrees with a very fine Backward Euler run",
          "[propagators]") {
    const auto p = rl();
    const long steps = 1L << 24;
    const double delta = kT / static_cast<double>(steps);
    for (double u0 : {0.0, -3e-5}) {
        const double exact = exact_linear_propagate(p.kappa, p.forcing, p.forcing_scale, 0.0, kT, u0);
        const double be =
            oracle::backward_euler(std::get<PwmSignal>(p.forcing), p.kappa, p.forcing_scale, 0.0,
                                   kT, steps, u0);
        // BE is first order: O(kappa delta) relative to the natural state scale.
        const double tol = 5.0 * p.kappa * delta * std::max(std::abs(exact), p.forcing_scale / p.kappa);
        CHECK(std::abs(exact - be) <= tol);
    }
}

TEST_CASE("exact propagator rejects opaque forcings", "[propagators]") {
    const CustomSignal custom{kT, [](double t) { return std::cos(t); }};
    CHECK_THROWS_AS(exact_linear_propagate(kKappa, custom, kScale, 0.0, kT, 0.0),
                    UnsupportedForcing);
    CHECK_THROWS_AS(ExactLinearPropagator(kKappa, custom, kScale), UnsupportedForcing);
}

TEST_CASE("exact convolution integrates across every PWM switching instant",
          "[propagators]") {
    const PwmSignal pwm(kT, 400);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, kT);
    for (int i = 0; i < 6; ++i) {
        double t0 = u(rng);
        double t1 = u(rng);
        if (t1 < t0) std::swap(t0, t1);
        const auto pieces = oracle::sampled_pieces(pwm, t0, t1, oracle::fine_cell(kT));
        const double ref = oracle::piece_convolution(pieces, kKappa, t1);
        std::size_t crossed = 0;
        const double got = exponential_convolution(pwm, kKappa, t0, t1, &crossed);
        INFO("t0 = " << t0 << ", t1 = " << t1);
        CHECK(std::abs(got - ref) <= 1e-10 * std::abs(ref));
        CHECK(crossed == pieces.size());
    }
    // Whole period, and an interval spanning a period boundary.
    const auto full = oracle::sampled_pieces(pwm, 0.0, kT, oracle::fine_cell(kT));
    const double ref = oracle::piece_convolution(full, kKappa, kT);
    const double got = exponential_convolution(pwm, kKappa, 0.0, kT);
    CHECK(std::abs(got - ref) <= 1e-10 * std::abs(ref));
    const double shifted = exponential_convolution(pwm, kKappa, kT, 2.0 * kT);
    CHECK(std::abs(shifted - ref) <= 1e-10 * std::abs(ref));
}

TEST_CASE("exact propagator satisfies the semigroup property", "[propagators]") {
    const auto p = rl();
    const ExactLinearPropagator prop(p.kappa, p.forcing, p.forcing_scale);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 3.0 * kT);
    for (int i = 0; i < 50; ++i) {
        std::array<double, 3> t{u(rng), u(rng), u(rng)};
        std::sort(t.begin(), t.end());
        if (t[1] - t[0] < 1e-9 || t[2] - t[1] < 1e-9) continue;
        const State u0 = State::Constant(1, 2e-5);
        const State direct = prop.advance(t[0], t[2], u0).state;
        const State split = prop.advance(t[1], t[2], prop.advance(t[0], t[1], u0).state).state;
        CHECK(std::abs(direct(0) - split(0)) <= 1e-12 * std::abs(direct(0)));
    }
}

TEST_CASE("exact solution satisfies the ODE between switching instants", "[propagators]") {
    const SmoothCoarseInput sine(CoarseKind::sine, kT);
    const double u0 = 1e-4;
    for (double t : {0.1 * kT, 0.33 * kT, 0.8 * kT, 1.4 * kT}) {
        const double h = 1e-5 * kT;
        const double up = exact_linear_propagate(kKappa, sine, kScale, 0.0, t + h, u0);
        const double dn = exact_linear_propagate(kKappa, sine, kScale, 0.0, t - h, u0);
        const double mid = exact_linear_propagate(kKappa, sine, kScale, 0.0, t, u0);
        const double deriv = (up - dn) / (2 * h);
        const double rhs = -kKappa * mid + kScale * sine(t);
        CHECK(std::abs(deriv - rhs) <= 1e-7 * std::max(std::abs(rhs), kKappa * std::abs(mid)));
    }
    // A constant piece of the PWM: derivative of the closed form.
    const PwmSignal pwm(kT, 100);
    const auto bps = pwm.breakpoints(0.0, kT);
    const double a = bps[10];
    const double b = bps[11];
    const double t = 0.5 * (a + b);
    const double h = 1e-3 * (b - a);
    const double up = exact_linear_propagate(kKappa, pwm, kScale, a, t + h, u0);
    const double dn = exact_linear_propagate(kKappa, pwm, kScale, a, t - h, u0);
    const double mid = exact_linear_propagate(kKappa, pwm, kScale, a, t, u0);
    const double rhs = -kKappa * mid + kScale * pwm(t);
    CHECK(std::abs((up - dn) / (2 * h) - rhs) <= 1e-7 * std::abs(kKappa * mid));
}

TEST_CASE("Backward Euler single-step examples", "[propagators]") {
    const ScalarBackwardEuler be(kKappa, ConstantSignal{0.0}, 1.0, 0.01);
    const auto r = be.advance(0.0, 0.01, State::Constant(1, 1.0));
    CHECK(r.state(0) == Approx(1.0 / 1.1).epsilon(1e-15));
    CHECK(r.solves == 1);

    const double c = 2.0;
    const ScalarBackwardEuler eq(kKappa, ConstantSignal{c}, kScale, 0.001);
    const double fixed = c * kScale / kKappa;
    CHECK(eq.advance(0.0, 0.1, State::Constant(1, fixed)).state(0) == Approx(fixed).epsilon(1e-13));
}

TEST_CASE("Backward Euler is first order", "[propagators]") {
    // Sine forcing: with PWM forcing the error does not shrink regularly
    // because the switching instants fall at varying offsets from the grid.
    for (int e : {10, 12, 14}) {
        const double ratio = be_error(e) / be_error(e + 1);
        INFO("steps 2^" << e << ", ratio " << ratio);
        CHECK(ratio >= 1.8);
        CHECK(ratio <= 2.2);
    }
    const double order = std::log2(be_error(12) / be_error(16)) / 4.0;
    CHECK(order >= 0.9);
    CHECK(order <= 1.1);
}

TEST_CASE("general Backward Euler matches the scalar one on a linear problem",
          "[propagators]") {
    const auto p = rl();
    PropagatorSpec spec{PropagatorKind::backward_euler, kT / 256};
    const State u0 = State::Constant(1, 1e-5);
    const auto general = backward_euler_run(p.as_ode(), 0.0, kT, u0, spec);
    const ScalarBackwardEuler scalar(p.kappa, p.forcing, p.forcing_scale, kT / 256);
    const auto direct = scalar.advance(0.0, kT, u0);
    // Newton's residual form and the direct solve round differently.
    CHECK(std::abs(general.state(0) - direct.state(0)) <= 1e-12 * p.forcing_scale / p.kappa);
    CHECK(general.solves == 256);
    CHECK(direct.solves == 256);
}

TEST_CASE("Newton Backward Euler on the nonlinear problem", "[propagators]") {
    const auto nl = make_nonlinear_test_problem(kKappa, PwmSignal(kT, 400),
                                                SmoothCoarseInput(CoarseKind::sine, kT), kScale, kT);
    PropagatorSpec spec{PropagatorKind::backward_euler, kT / 1024};
    const State u0 = State::Constant(1, 0.5);
    const auto analytic = backward_euler_run(nl, 0.0, kT, u0, spec);

    auto no_jac = nl;
    no_jac.jacobian = nullptr;
    const auto fd = backward_euler_run(no_jac, 0.0, kT, u0, spec);
    CHECK(std::abs(analytic.state(0) - fd.state(0)) <= 1e-10);

    // Each step's residual is driven below newton_tol.
    const double h = kT / 1024;
    State u = u0;
    for (int j = 1; j <= 1024; ++j) {
        const State next = backward_euler_run(nl, (j - 1) * h, j * h, u, spec).state;
        const double res = (next - u - h * nl.full_rhs(j * h, next)).lpNorm<Eigen::Infinity>();
        CHECK(res <= 1e-12);
        u = next;
    }
    CHECK(std::abs(u(0) - analytic.state(0)) <= 1e-14);
}

TEST_CASE("Newton failure reports the time reached", "[propagators]") {
    PeriodicODEProblem stiff;
    stiff.dimension = 1;
    stiff.period = 1.0;
    stiff.full_rhs = [](double, const State& u) { State r(1); r(0) = -std::exp(u(0)) * 50.0; return r; };
    stiff.smooth_rhs = stiff.full_rhs;
    PropagatorSpec spec{PropagatorKind::backward_euler, 0.5, 1e-14, 1};
    try {
        (void)backward_euler_run(stiff, 0.0, 1.0, State::Constant(1, 3.0), spec);
        FAIL("expected PropagationFailure");
    } catch (const PropagationFailure& e) {
        CHECK(e.time() == Approx(0.5));
        CHECK(e.residual() > 0.0);
    }
}

TEST_CASE("substep must divide the interval", "[propagators]") {
    CHECK(step_count(0.0, kT, kT / 64) == 64);
    CHECK_THROWS_AS(step_count(0.0, kT, kT / 64 * 1.01), InvalidArgument);
    const ScalarBackwardEuler be(kKappa, ConstantSignal{0.0}, 1.0, 0.003);
    CHECK_THROWS_AS(be.advance(0.0, 0.01, State::Constant(1, 1.0)), InvalidArgument);
    CHECK_THROWS_AS(step_count(0.01, 0.0, 0.001), InvalidArgument);
}

TEST_CASE("coarse one-step examples", "[propagators]") {
    LinearScalarProblem p;
    p.kappa = 10.0;
    p.period = 1.0;
    p.smooth_forcing = ConstantSignal{0.0};
    CHECK(coarse_one_step(p, 0.0, 0.01, 1.0) == Approx(1.0 / 1.1).epsilon(1e-15));

    p.smooth_forcing = ConstantSignal{1.0};
    p.forcing_scale = 1.0;
    CHECK(coarse_one_step(p, 0.0, 0.01, 0.0) == Approx(0.01 / 1.1).epsilon(1e-15));

    // Forcing sampled at the right end: the sine vanishes at T/2.
    const auto q = rl(CoarseKind::sine);
    CHECK(std::abs(coarse_one_step(q, 0.25 * kT, 0.5 * kT, 0.0)) <= 1e-20);

    // General-problem overload agrees with the scalar one.
    const auto g = coarse_one_step(q.as_ode(), 0.1 * kT, 0.35 * kT, State::Constant(1, 2e-5));
    CHECK(g.state(0) == Approx(coarse_one_step(q, 0.1 * kT, 0.35 * kT, 2e-5)).epsilon(1e-14));
    CHECK(g.solves == 1);
}

TEST_CASE("Backward Euler stability function", "[propagators]") {
    CHECK(stability_function_be(0.0) == 1.0);
    CHECK(stability_function_be(1.0) == 0.5);
    CHECK(stability_function_be(0.1) == Approx(1.0 / 1.1).epsilon(1e-15));
    CHECK_THROWS_AS(stability_function_be(-1.0), std::domain_error);
    for (double z : {1e-6, 0.01, 0.1, 1.0, 10.0, 1e3}) {
        const double phi = stability_function_be(z);
        CHECK(phi > 0.0);
        CHECK(phi < 1.0);
        CHECK(std::exp(-z) < phi);
        const auto ev = evaluate_stability_be(z);
        CHECK(ev.defect == Approx(phi - std::exp(-z)).epsilon(1e-12));
    }
}

TEST_CASE("propagator factories", "[propagators]") {
    const auto p = rl();
    PropagatorSpec exact{PropagatorKind::exact_linear};
    PropagatorSpec be{PropagatorKind::backward_euler, kT / 64};
    const auto fine = make_fine_propagator(p, exact);
    const auto coarse = make_coarse_propagator(p, be);
    CHECK(fine->dimension() == 1);
    const State u0 = State::Constant(1, 0.0);
    CHECK(fine->advance(0.0, kT, u0).state(0) ==
          Approx(exact_linear_propagate(p.kappa, p.forcing, p.forcing_scale, 0.0, kT, 0.0)));
    const auto c = coarse->advance(0.0, kT / 64, u0);
    CHECK(c.state(0) == Approx(coarse_one_step(p, 0.0, kT / 64, 0.0)).epsilon(1e-15));
    CHECK_THROWS_AS(make_propagator(p.as_ode(), RhsChoice::full, exact), InvalidArgument);
    CHECK(parse_propagator_kind("be") == PropagatorKind::backward_euler);
    CHECK(parse_propagator_kind(to_string(PropagatorKind::exact_linear)) ==
          PropagatorKind::exact_linear);
    CHECK_THROWS_AS(parse_propagator_kind("rk4"), InvalidArgument);
}
