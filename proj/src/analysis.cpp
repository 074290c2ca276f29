#include "ppr/analysis.hpp"

#include "ppr/errors.hpp"
#include "ppr/propagators.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ppr {

namespace {

// Power-iteration steps before deciding the ratio is not going to settle.
constexpr int kPlainPowerBudget = 2000;

Eigen::VectorXd random_unit(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(n);
    for (auto& x : v) {
        x = normal(rng);
    }
    return v.normalized();
}

/// Largest modulus among the eigenvalues of a real 2x2 matrix.
double dominant_modulus_2x2(const Eigen::Matrix2d& h) {
    const double half_trace = 0.5 * h.trace();
    const double det = h.determinant();
    const double disc = half_trace * half_trace - det;
    if (disc >= 0.0) {
        const double root = std::sqrt(disc);
        return std::max(std::abs(half_trace + root), std::abs(half_trace - root));
    }
    return std::sqrt(det);
}

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& w) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(w);
    return qr.householderQ() * Eigen::MatrixXd::Identity(w.rows(), w.cols());
}

}  // namespace

ErrorIterationMatrix build_S(int subintervals, double phi, double defect) {
    if (subintervals < 1) {
        throw InvalidArgument("error iteration matrix needs N >= 1");
    }
    const int n_sub = subintervals;
    ErrorIterationMatrix s;
    s.subintervals = n_sub;
    s.phi = phi;
    s.defect = defect;
    s.matrix = Eigen::MatrixXd::Zero(n_sub + 1, n_sub + 1);

    // Powers of phi by repeated multiplication, shared by every entry.
    std::vector<double> powers(static_cast<std::size_t>(n_sub) + 1, 1.0);
    for (int i = 1; i <= n_sub; ++i) {
        powers[static_cast<std::size_t>(i)] = powers[static_cast<std::size_t>(i - 1)] * phi;
    }
    for (int n = 0; n <= n_sub; ++n) {
        s.matrix(n, n_sub) = powers[static_cast<std::size_t>(n)];
        for (int j = 0; j < n; ++j) {
            s.matrix(n, j) += powers[static_cast<std::size_t>(n - 1 - j)] * defect;
        }
    }
    return s;
}

double spectral_radius(const Eigen::MatrixXd& matrix, const SpectralRadiusOptions& options) {
    if (matrix.rows() != matrix.cols() || matrix.rows() == 0) {
        throw InvalidArgument("spectral_radius needs a non-empty square matrix");
    }
    if (!(options.tol > 0.0)) {
        throw InvalidArgument("spectral_radius tolerance must be positive");
    }
    if (matrix.rows() == 1) {
        return std::abs(matrix(0, 0));
    }

    std::mt19937_64 rng(options.seed);
    Eigen::VectorXd v = random_unit(matrix.rows(), rng);
    double previous = -1.0;
    double estimate = 0.0;
    const int plain_budget = std::min(kPlainPowerBudget, options.max_iterations);
    for (int it = 0; it < plain_budget; ++it) {
        Eigen::VectorXd w = matrix * v;
        estimate = w.norm();
        if (estimate == 0.0) {
            return 0.0;
        }
        if (std::abs(estimate - previous) <= options.tol) {
            return estimate;
        }
        previous = estimate;
        v = w / estimate;
    }

    // Two-dimensional subspace iteration: captures a dominant conjugate pair.
    Eigen::MatrixXd block(matrix.rows(), 2);
    block.col(0) = v;
    block.col(1) = random_unit(matrix.rows(), rng);
    block = orthonormal_columns(block);
    previous = -1.0;
    for (int it = plain_budget; it < options.max_iterations; ++it) {
        const Eigen::MatrixXd w = matrix * block;
        const Eigen::Matrix2d ritz = block.transpose() * w;
        estimate = dominant_modulus_2x2(ritz);
        if (std::abs(estimate - previous) <= options.tol) {
            return estimate;
        }
        previous = estimate;
        if (w.norm() == 0.0) {
            return 0.0;
        }
        block = orthonormal_columns(w);
    }
    throw EstimationFailure(previous, estimate);
}

BoundSequence bound_xl(double phi, double defect, int subintervals, int depth) {
    if (subintervals < 1) {
        throw InvalidArgument("bound needs N >= 1");
    }
    if (depth < 1) {
        throw InvalidArgument("bound depth must be at least 1");
    }
    BoundSequence b;
    b.phi_abs = std::abs(phi);
    b.defect_abs = std::abs(defect);
    b.subintervals = subintervals;
    if (!(b.phi_abs + b.defect_abs < 1.0)) {
        throw BoundInapplicable("contraction condition |phi| + |defect| < 1 fails");
    }
    const double exponent = static_cast<double>(subintervals) / (subintervals + 1.0);
    b.values.reserve(static_cast<std::size_t>(depth) + 1);
    b.values.push_back(1.0);
    for (int l = 1; l <= depth; ++l) {
        b.values.push_back(std::pow(b.phi_abs * b.values.back() + b.defect_abs, exponent));
    }
    return b;
}

ContractionResult contraction_check(double phi, double z) {
    ContractionResult r;
    r.margin = 1.0 - (std::abs(phi) + std::abs(std::exp(-z) - phi));
    r.holds = r.margin > 0.0;
    return r;
}

double error_norm(const Eigen::MatrixXd& iterate, const Eigen::MatrixXd& reference) {
    if (iterate.rows() != reference.rows() || iterate.cols() != reference.cols()) {
        throw InvalidArgument("reference and iterate shapes differ");
    }
    return (reference - iterate).lpNorm<Eigen::Infinity>();
}

double rho_numerical(const PararealRun& run, const Eigen::MatrixXd& reference,
                     std::optional<int> iteration) {
    if (!iteration && !run.converged_at) {
        throw InvalidArgument("rho_numerical needs a converged run or an explicit iteration");
    }
    const int k = iteration.value_or(*run.converged_at);
    if (k < 1 || k > run.last_iteration()) {
        throw UndefinedRatio("convergence factor needs 1 <= K <= last recorded iteration");
    }
    const double e0 = error_norm(run.iterate(0), reference);
    if (e0 == 0.0) {
        throw UndefinedRatio("initial error is zero");
    }
    const double ek = error_norm(run.iterate(k), reference);
    return std::pow(ek / e0, 1.0 / k);
}

// --- closed-form periodic solution -----------------------------------------

PeriodicSolution::PeriodicSolution(double kappa, PeriodicSignal forcing, double scale,
                                   double period)
    : kappa_(kappa), forcing_(std::move(forcing)), scale_(scale), period_(period) {
    if (!(kappa > 0.0)) {
        throw NoPeriodicSolution("kappa must be positive for a unique periodic solution");
    }
    if (!(period > 0.0)) {
        throw InvalidArgument("period must be positive");
    }
    // u(0) = e^{-kappa T} u(0) + scale * conv  =>  u(0) = scale * conv / (1 - e^{-kappa T}).
    initial_ = scale_ * exponential_convolution(forcing_, kappa_, 0.0, period_) /
               (-std::expm1(-kappa_ * period_));
}

double PeriodicSolution::operator()(double t) const {
    const double r = reduce_to_period(t, period_);
    if (r <= 0.0) {
        return initial_;
    }
    return exact_linear_propagate(kappa_, forcing_, scale_, 0.0, r, initial_);
}

Eigen::MatrixXd PeriodicSolution::sample(const std::vector<double>& times) const {
    Eigen::MatrixXd out(1, static_cast<Eigen::Index>(times.size()));
    for (std::size_t i = 0; i < times.size(); ++i) {
        out(0, static_cast<Eigen::Index>(i)) = (*this)(times[i]);
    }
    return out;
}

PeriodicSolution closed_form_periodic(double kappa, const PeriodicSignal& forcing, double scale,
                                      double period) {
    return {kappa, forcing, scale, period};
}

Eigen::MatrixXd affine_periodic_reference(const Propagator& fine, double period,
                                          const std::vector<double>& times) {
    const int dim = fine.dimension();
    const State zero = State::Zero(dim);
    const State offset = fine.advance(0.0, period, zero).state;
    Eigen::MatrixXd monodromy(dim, dim);
    for (int j = 0; j < dim; ++j) {
        monodromy.col(j) = fine.advance(0.0, period, State::Unit(dim, j)).state - offset;
    }
    const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(dim, dim) - monodromy;
    const State u0 = system.partialPivLu().solve(offset);

    Eigen::MatrixXd out(dim, static_cast<Eigen::Index>(times.size()));
    State u = u0;
    double t = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] > t) {
            u = fine.advance(t, times[i], u).state;
            t = times[i];
        }
        out.col(static_cast<Eigen::Index>(i)) = u;
    }
    return out;
}

}  // namespace ppr
