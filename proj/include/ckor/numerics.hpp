#pragma once

#include <vector>

#include <Eigen/Cholesky>

#include "ckor/types.hpp"

namespace ckor {

/// Default relative cutoff for pseudoinverses (relative to the largest singular value).
inline constexpr double kDefaultPinvRtol = 1e-12;

/// Cholesky factor of K + (lambda + jitter) I, reused across right-hand sides.
///
/// If the plain factorization fails, diagonal jitter of 1e-12, 1e-10 and 1e-8
/// times the mean diagonal is tried in turn before giving up with a
/// NumericalError listing the levels attempted.
class SpdSolver {
public:
    SpdSolver() = default;
    SpdSolver(const Eigen::Ref<const Matrix>& K, double lambda);

    Matrix solve(const Eigen::Ref<const Matrix>& B) const;

    Index size() const noexcept { return factor_.rows(); }
    double lambda() const noexcept { return lambda_; }
    /// Extra diagonal added on top of lambda, 0 when none was needed.
    double jitter() const noexcept { return jitter_; }
    /// Lower-triangular factor L with L L^T = K + (lambda + jitter) I.
    const Matrix& factor() const noexcept { return factor_; }

    /// Rebuild from a stored factor (model deserialization).
    static SpdSolver from_factor(Matrix lower, double lambda, double jitter);

private:
    Matrix factor_;
    double lambda_ = 0.0;
    double jitter_ = 0.0;
};

/// (K + lambda I)^{-1} B for symmetric PSD K and lambda > 0.
Matrix ridge_solve(const Eigen::Ref<const Matrix>& K, const Eigen::Ref<const Matrix>& B, double lambda);

/// Moore-Penrose pseudoinverse; singular values below rtol * sigma_max are dropped.
Matrix pinv(const Eigen::Ref<const Matrix>& M, double rtol = kDefaultPinvRtol);

struct TruncatedSvd {
    Matrix modes;                 // N x r, orthonormal columns
    Vector singular_values;       // r values, non-increasing
    Vector all_singular_values;   // the full spectrum, non-increasing
    double energy_fraction = 1.0; // sum_{i<=r} s_i^2 / sum_j s_j^2

    Index rank() const noexcept { return modes.cols(); }
};

/// Energy-threshold truncation of a symmetric PSD matrix.
///
/// r is the smallest count whose cumulative squared-singular-value share
/// reaches tau percent. tau = 100 keeps the numerical rank. Values tied with
/// the last kept one are kept as well.
TruncatedSvd truncated_svd(const Eigen::Ref<const Matrix>& K, double tau_percent);

/// Same decomposition with a caller-chosen rank.
TruncatedSvd truncated_svd_rank(const Eigen::Ref<const Matrix>& K, Index r);

/// Smallest eigenvalue divided by the largest absolute eigenvalue.
double relative_min_eigenvalue(const Eigen::Ref<const Matrix>& K);

}  // namespace ckor
