#pragma once

// Convergence theory for the scalar model u' + kappa u = f with an exact fine
// solver and a one-step coarse solver of stability function phi: the error
// iteration e^{k+1} = S e^k, its spectral radius, the x_l bound sequence and
// the measured convergence factor, plus the closed-form periodic oracle.

#include "ppr/parareal.hpp"
#include "ppr/signals.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace ppr {

struct ErrorIterationMatrix {
    int subintervals = 1;
    double phi = 0.0;
    double defect = 0.0;  // e^{-kappa dT} - phi
    Eigen::MatrixXd matrix;
};

/// S = (I - phi * lower shift)^{-1} (defect * lower shift + top-right 1),
/// assembled entrywise: S[n][N] = phi^n, S[n][j] = phi^{n-1-j} defect for j < n.
ErrorIterationMatrix build_S(int subintervals, double phi, double defect);

struct SpectralRadiusOptions {
    double tol = 1e-12;
    int max_iterations = 100000;
    std::uint64_t seed = 42;
};

/// Dominant eigenvalue modulus. Plain power iteration first; if the norm ratio
/// keeps oscillating (complex or +/- dominant pair) a two-vector subspace
/// iteration with Rayleigh-Ritz takes over.
double spectral_radius(const Eigen::MatrixXd& matrix, const SpectralRadiusOptions& options = {});

struct BoundSequence {
    std::vector<double> values;  // x_0 .. x_L
    double phi_abs = 0.0;
    double defect_abs = 0.0;
    int subintervals = 1;

    [[nodiscard]] double back() const { return values.back(); }
    [[nodiscard]] double at(int l) const { return values.at(static_cast<std::size_t>(l)); }
};

/// x_0 = 1, x_l = (|phi| x_{l-1} + |defect|)^{N/(N+1)}.
BoundSequence bound_xl(double phi, double defect, int subintervals, int depth);

struct ContractionResult {
    bool holds = false;
    double margin = 0.0;  // 1 - (|phi| + |e^{-z} - phi|)
};

ContractionResult contraction_check(double phi, double z);

/// max_n |reference_n - U_n|_inf.
double error_norm(const Eigen::MatrixXd& iterate, const Eigen::MatrixXd& reference);

/// (|e^K| / |e^0|)^{1/K} with K = converged_at unless given explicitly.
double rho_numerical(const PararealRun& run, const Eigen::MatrixXd& reference,
                     std::optional<int> iteration = std::nullopt);

/// The unique T-periodic solution of u' + kappa u = scale f(t).
class PeriodicSolution {
public:
    PeriodicSolution(double kappa, PeriodicSignal forcing, double scale, double period);

    [[nodiscard]] double initial_value() const noexcept { return initial_; }
    [[nodiscard]] double operator()(double t) const;
    /// 1 x times.size() matrix of u(times[n]).
    [[nodiscard]] Eigen::MatrixXd sample(const std::vector<double>& times) const;

private:
    double kappa_;
    PeriodicSignal forcing_;
    double scale_;
    double period_;
    double initial_;
};

PeriodicSolution closed_form_periodic(double kappa, const PeriodicSignal& forcing, double scale,
                                      double period);

/// Periodic state of an affine period map u -> A u + b (any linear
/// propagator), found by shooting: A and b are recovered from dimension + 1
/// period solves and u0 = (I - A)^{-1} b. Returns u at every time in `times`
/// (propagated from u0 with the same propagator).
Eigen::MatrixXd affine_periodic_reference(const Propagator& fine, double period,
                                          const std::vector<double>& times);

}  // namespace ppr
