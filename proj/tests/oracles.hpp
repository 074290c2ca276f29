#pragma once

// Test-only reference computations. None of these call into the library's
// breakpoint table, convolution or propagator code: they are built from the
// pointwise signal formulas and plain loops.

#include "ppr/signals.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <algorithm>
#include <complex>
#include <vector>

namespace ppr::oracle {

struct Piece {
    double begin;
    double end;
    double value;
};

/// Grid width that resolves every PWM piece: the shortest on/off stretch of
/// the m = 400 signal is about 3.1e-7 T, so cells of T/2^23 cannot hide one.
inline double fine_cell(double period) { return std::ldexp(period, -23); }

/// Pieces of a pointwise signal on [t0, t1]: sampled at the centres of cells
/// no wider than `cell`, each change located by bisection between centres.
template <typename Signal>
std::vector<Piece> sampled_pieces(const Signal& f, double t0, double t1, double cell) {
    const long cells = std::max(1L, static_cast<long>(std::ceil((t1 - t0) / cell)));
    const double h = (t1 - t0) / static_cast<double>(cells);
    const auto centre = [&](long c) { return t0 + (static_cast<double>(c) + 0.5) * h; };
    std::vector<Piece> out;
    double start = t0;
    double current = f(centre(0));
    for (long c = 1; c < cells; ++c) {
        const double v = f(centre(c));
        if (v == current) continue;
        double lo = centre(c - 1);
        double hi = centre(c);
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            if (f(mid) == current) lo = mid; else hi = mid;
        }
        const double knot = 0.5 * (lo + hi);
        out.push_back({start, knot, current});
        start = knot;
        current = v;
    }
    out.push_back({start, t1, current});
    return out;
}

/// int_{t0}^{t1} exp(-kappa (t1 - s)) f(s) ds over sampled pieces.
inline double piece_convolution(const std::vector<Piece>& pieces, double kappa, double t1) {
    double acc = 0.0;
    for (const auto& p : pieces) {
        acc += p.value * (std::exp(-kappa * (t1 - p.end)) - std::exp(-kappa * (t1 - p.begin))) /
               kappa;
    }
    return acc;
}

/// Backward Euler for u' = -kappa u + scale f(t), uniform steps.
template <typename Signal>
double backward_euler(const Signal& f, double kappa, double scale, double t0, double t1,
                      long steps, double u) {
    const double h = (t1 - t0) / static_cast<double>(steps);
    for (long j = 1; j <= steps; ++j) {
        u = (u + h * scale * f(t0 + static_cast<double>(j) * h)) / (1.0 + kappa * h);
    }
    return u;
}

/// One sweep of e_0' = e_N, e_n' = phi e_{n-1}' + d e_{n-1}.
inline Eigen::VectorXd error_recursion(double phi, double d, const Eigen::VectorXd& e) {
    const Eigen::Index n = e.size() - 1;
    Eigen::VectorXd out(e.size());
    out(0) = e(n);
    for (Eigen::Index i = 1; i <= n; ++i) {
        out(i) = phi * out(i - 1) + d * e(i - 1);
    }
    return out;
}

/// S from its two factors, inverted numerically.
inline Eigen::MatrixXd s_from_factors(int n_sub, double phi, double d) {
    const int size = n_sub + 1;
    Eigen::MatrixXd left = Eigen::MatrixXd::Identity(size, size);
    Eigen::MatrixXd right = Eigen::MatrixXd::Zero(size, size);
    right(0, n_sub) = 1.0;
    for (int i = 1; i < size; ++i) {
        left(i, i - 1) = -phi;
        right(i, i - 1) = d;
    }
    return left.inverse() * right;
}

inline double eigen_spectral_radius(const Eigen::MatrixXd& m) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
    double r = 0.0;
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
        r = std::max(r, std::abs(solver.eigenvalues()(i)));
    }
    return r;
}

}  // namespace ppr::oracle
