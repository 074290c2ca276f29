#include "catch_amalgamated.hpp"

#include "oracles.hpp"
#include "ppr/analysis.hpp"
#include "ppr/errors.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace ppr;
using Catch::Approx;

namespace {

constexpr double kT = 0.02;

struct Coefficients {
    double phi;
    double d;
};

Coefficients be_coefficients(double z) {
    const double phi = stability_function_be(z);
    return {phi, std::exp(-z) - phi};
}

}  // namespace

TEST_CASE("S for a single subinterval", "[analysis]") {
    const auto s = build_S(1, 0.9, -0.05);
    Eigen::Matrix2d expected;
    expected << 0.0, 1.0, -0.05, 0.9;
    CHECK(s.matrix.isApprox(expected, 0.0));

    const auto diag = build_S(1, 0.9, 0.0);
    CHECK(spectral_radius(diag.matrix) == Approx(0.9).epsilon(1e-10));

    const auto zero = build_S(4, 0.0, 0.0);
    CHECK(zero.matrix.sum() == 1.0);
    CHECK(zero.matrix(0, 4) == 1.0);
    CHECK(spectral_radius(zero.matrix) == 0.0);

    CHECK_THROWS_AS(build_S(0, 0.5, 0.1), InvalidArgument);
}

TEST_CASE("entrywise S equals the product of its inverted factors", "[analysis]") {
    for (int n : {1, 2, 4, 8, 16, 64}) {
        for (double z : {0.01, 0.1, 1.0}) {
            const auto [phi, d] = be_coefficients(z);
            const auto s = build_S(n, phi, d);
            const auto ref = oracle::s_from_factors(n, phi, d);
            CHECK((s.matrix - ref).cwiseAbs().maxCoeff() <= 1e-14);
        }
    }
}

TEST_CASE("matrix form and sweep recursion agree", "[analysis]") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (int n : {1, 2, 4, 8, 16}) {
        const auto [phi, d] = be_coefficients(2.0 / n);
        const auto s = build_S(n, phi, d);
        for (int trial = 0; trial < 10; ++trial) {
            Eigen::VectorXd e(n + 1);
            for (auto& x : e) x = g(rng);
            const Eigen::VectorXd via_matrix = s.matrix * e;
            const Eigen::VectorXd via_sweep = oracle::error_recursion(phi, d, e);
            CHECK((via_matrix - via_sweep).lpNorm<Eigen::Infinity>() <=
                  1e-13 * e.lpNorm<Eigen::Infinity>());
        }
    }
}

TEST_CASE("spectral radius on known matrices", "[analysis]") {
    Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(2, 2);
    diag(0, 0) = 0.5;
    diag(1, 1) = 0.2;
    CHECK(spectral_radius(diag) == Approx(0.5).epsilon(1e-10));

    // Pure rotation scaled by 0.7: complex pair, power iteration alone cycles.
    Eigen::MatrixXd rot(3, 3);
    const double c = std::cos(1.0);
    const double s = std::sin(1.0);
    rot << 0.7 * c, -0.7 * s, 0.0, 0.7 * s, 0.7 * c, 0.0, 0.0, 0.0, 0.1;
    CHECK(spectral_radius(rot) == Approx(0.7).epsilon(1e-8));

    // Dominant +/- pair.
    Eigen::MatrixXd pm = Eigen::MatrixXd::Zero(3, 3);
    pm(0, 0) = 0.6;
    pm(1, 1) = -0.6;
    pm(2, 2) = 0.3;
    CHECK(spectral_radius(pm) == Approx(0.6).epsilon(1e-8));

    CHECK_THROWS_AS(spectral_radius(Eigen::MatrixXd(2, 3)), InvalidArgument);
}

TEST_CASE("spectral radius of S matches a dense eigensolver", "[analysis]") {
    for (int n : {1, 2, 8, 16, 64, 128}) {
        for (double z : {0.005, 0.05, 0.2, 2.0}) {
            const auto [phi, d] = be_coefficients(z);
            const auto s = build_S(n, phi, d);
            const double ref = oracle::eigen_spectral_radius(s.matrix);
            INFO("N = " << n << ", z = " << z);
            CHECK(spectral_radius(s.matrix) == Approx(ref).epsilon(1e-7));
        }
    }
}

TEST_CASE("bound sequence examples", "[analysis]") {
    const auto [phi, d] = be_coefficients(0.1);
    const auto b = bound_xl(phi, d, 2, 10);
    CHECK(b.at(0) == 1.0);
    CHECK(b.at(1) == Approx(std::pow(phi + std::abs(d), 2.0 / 3.0)).epsilon(1e-14));

    // d = 0: fixed point x = (phi x)^{N/(N+1)}, i.e. x = phi^N.
    const auto lim = bound_xl(0.8, 0.0, 3, 2000);
    CHECK(lim.back() == Approx(std::pow(0.8, 3)).epsilon(1e-10));

    CHECK_THROWS_AS(bound_xl(0.7, 0.4, 4, 10), BoundInapplicable);
    CHECK_THROWS_AS(bound_xl(0.5, 0.1, 0, 10), InvalidArgument);
    CHECK_THROWS_AS(bound_xl(0.5, 0.1, 4, 0), InvalidArgument);
}

TEST_CASE("bound sequence is non-increasing in (0, 1]", "[analysis]") {
    for (int n : {1, 4, 32, 512}) {
        const auto [phi, d] = be_coefficients(0.2 / n);
        const auto b = bound_xl(phi, d, n, 256);
        for (int l = 1; l <= 256; ++l) {
            CHECK(b.at(l) <= b.at(l - 1));
            CHECK(b.at(l) > 0.0);
        }
    }
}

TEST_CASE("contraction check", "[analysis]") {
    const auto [phi, d] = be_coefficients(0.1);
    const auto ok = contraction_check(phi, 0.1);
    CHECK(ok.holds);
    CHECK(ok.margin == Approx(1.0 - (phi + std::abs(d))).epsilon(1e-14));
    const auto bad = contraction_check(0.99, 1.0);
    CHECK_FALSE(bad.holds);
    CHECK(bad.margin < 0.0);
}

TEST_CASE("spectral radius never exceeds the bound on the parameter grid", "[analysis]") {
    for (double z = 0.001; z <= 2.0 * (1 + 1e-12); z *= std::pow(2000.0, 1.0 / 39.0)) {
        for (int n : {1, 2, 4, 8, 16, 32, 64, 128, 256, 512}) {
            const auto [phi, d] = be_coefficients(z);
            const double rho = oracle::eigen_spectral_radius(build_S(n, phi, d).matrix);
            const double x = bound_xl(phi, d, n, 256).back();
            INFO("z = " << z << ", N = " << n);
            CHECK(rho <= x + 1e-12);
        }
    }
}

TEST_CASE("measured error decay follows S", "[analysis]") {
    const auto p = normalize_rl(default_rl_circuit(CoarseKind::sine));
    const int n_sub = 8;
    PararealConfig c;
    c.subintervals = n_sub;
    c.tolerance = 1e-13;
    c.max_iterations = 20;
    c.fine_spec = {PropagatorKind::exact_linear};
    c.coarse_spec = {PropagatorKind::backward_euler, kT / n_sub};
    const auto run = pp_ic_solve(p, c);
    const auto ref = closed_form_periodic(p.kappa, p.forcing, p.forcing_scale, kT).sample(run.times);
    const auto [phi, d] = be_coefficients(p.kappa * kT / n_sub);
    const auto s = build_S(n_sub, phi, d);

    Eigen::VectorXd predicted = (ref - run.iterate(0)).transpose();
    for (int k = 1; k <= std::min(12, run.last_iteration()); ++k) {
        predicted = s.matrix * predicted;
        const Eigen::VectorXd measured = (ref - run.iterate(k)).transpose();
        const double ratio = measured.lpNorm<Eigen::Infinity>() / predicted.lpNorm<Eigen::Infinity>();
        INFO("k = " << k);
        CHECK(ratio >= 0.99);
        CHECK(ratio <= 1.01);
    }
}

TEST_CASE("numerical convergence factor", "[analysis]") {
    PararealRun run;
    run.times = {0.0, 1.0};
    Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(1, 2);
    Eigen::MatrixXd e0(1, 2);
    e0 << 1.0, -2.0;
    run.iterates = {e0, 0.1 * e0, 0.01 * e0};
    CHECK(rho_numerical(run, ref, 1) == Approx(0.1).epsilon(1e-14));
    CHECK(rho_numerical(run, ref, 2) == Approx(0.1).epsilon(1e-14));
    run.converged_at = 2;
    CHECK(rho_numerical(run, ref) == Approx(0.1).epsilon(1e-14));
    CHECK(error_norm(e0, ref) == 2.0);

    CHECK_THROWS_AS(rho_numerical(run, ref, 0), UndefinedRatio);
    CHECK_THROWS_AS(rho_numerical(run, ref, 3), UndefinedRatio);
    PararealRun zero = run;
    zero.iterates = {ref, ref};
    CHECK_THROWS_AS(rho_numerical(zero, ref, 1), UndefinedRatio);
}

TEST_CASE("closed-form periodic solution: constant forcing", "[analysis]") {
    const auto sol = closed_form_periodic(10.0, ConstantSignal{3.0}, 0.01, kT);
    for (double t : {0.0, 0.3 * kT, kT, 2.7 * kT}) {
        CHECK(sol(t) == Approx(3.0 * 0.01 / 10.0).epsilon(1e-13));
    }
}

TEST_CASE("closed-form periodic solution: sine forcing amplitude and phase", "[analysis]") {
    const double kappa = 10.0;
    const double scale = 0.01;
    const double w = 2.0 * std::numbers::pi / kT;
    const auto sol = closed_form_periodic(kappa, SmoothCoarseInput(CoarseKind::sine, kT), scale, kT);
    const double amp = scale / std::sqrt(kappa * kappa + w * w);
    const double lag = std::atan2(w, kappa);
    for (int i = 0; i <= 16; ++i) {
        const double t = kT * i / 16.0;
        const double expected = amp * std::sin(w * t - lag);
        CHECK(std::abs(sol(t) - expected) <= 1e-12 * amp);
    }
}

TEST_CASE("closed-form periodic solution: PWM forcing matches long integration",
          "[analysis]") {
    const auto p = normalize_rl(default_rl_circuit());
    const auto sol = closed_form_periodic(p.kappa, p.forcing, p.forcing_scale, p.period);
    const auto pieces = oracle::sampled_pieces(std::get<PwmSignal>(p.forcing), 0.0, kT, oracle::fine_cell(kT));
    double u = 0.0;
    for (int k = 0; k < 200; ++k) {
        for (const auto& pc : pieces) {
            const double rate = p.kappa * (pc.end - pc.begin);
            u = u * std::exp(-rate) - p.forcing_scale * pc.value / p.kappa * std::expm1(-rate);
        }
    }
    CHECK(std::abs(sol.initial_value() - u) <= 1e-10 * std::abs(u));
    CHECK(sol(kT) == Approx(sol(0.0)).epsilon(1e-12));
}

TEST_CASE("periodic solution needs a positive decay rate", "[analysis]") {
    CHECK_THROWS_AS(closed_form_periodic(0.0, ConstantSignal{1.0}, 1.0, kT), NoPeriodicSolution);
    CHECK_THROWS_AS(closed_form_periodic(-1.0, ConstantSignal{1.0}, 1.0, kT), NoPeriodicSolution);
}

TEST_CASE("affine shooting reference is the limit of sequential Backward Euler",
          "[analysis]") {
    const auto p = normalize_rl(default_rl_circuit());
    const auto fine = make_fine_propagator(p, {PropagatorKind::backward_euler, kT / 1024});
    const auto times = uniform_times(kT, 4);
    const auto ref = affine_periodic_reference(*fine, kT, times);
    const auto seq = sequential_steady_state(*fine, kT, 1e-16, 100000);
    CHECK(std::abs(ref(0, 0) - seq.final_state()(0)) <= 1e-14);
    CHECK(std::abs(ref(0, 4) - ref(0, 0)) <= 1e-17);
}
