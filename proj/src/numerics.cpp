#include "ckor/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "ckor/error.hpp"

namespace ckor {

namespace {

void require_square(const Eigen::Ref<const Matrix>& K, const char* what)
{
    if (K.rows() != K.cols()) {
        throw InputError(std::string(what) + ": matrix must be square, got " + std::to_string(K.rows()) +
                         "x" + std::to_string(K.cols()));
    }
}

void require_symmetric(const Eigen::Ref<const Matrix>& K, double rel_tol, const char* what)
{
    const double scale = std::max(K.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    const double asym = (K - K.transpose()).cwiseAbs().maxCoeff();
    if (asym > rel_tol * scale) {
        throw InputError(std::string(what) + ": matrix is not symmetric (max asymmetry " + std::to_string(asym) +
                         ")");
    }
}

struct SymmetricSpectrum {
    Vector values;   // non-increasing
    Matrix vectors;  // matching columns
};

SymmetricSpectrum descending_spectrum(const Eigen::Ref<const Matrix>& K)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(K);
    if (es.info() != Eigen::Success) throw NumericalError("symmetric eigendecomposition did not converge");
    return {es.eigenvalues().reverse(), es.eigenvectors().rowwise().reverse()};
}

}  // namespace

SpdSolver::SpdSolver(const Eigen::Ref<const Matrix>& K, double lambda) : lambda_(lambda)
{
    require_square(K, "ridge_solve");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw InputError("ridge_solve: regularization must be positive, got " + std::to_string(lambda));
    }
    require_symmetric(K, 1e-8, "ridge_solve");

    const Index n = K.rows();
    const double mean_diag = n > 0 ? K.diagonal().mean() + lambda : 1.0;
    std::vector<double> attempted;
    for (double rel : {0.0, 1e-12, 1e-10, 1e-8}) {
        const double jitter = rel * mean_diag;
        Matrix shifted = K;
        shifted.diagonal().array() += lambda + jitter;
        Eigen::LLT<Matrix> llt(shifted);
        attempted.push_back(jitter);
        if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().allFinite()) {
            factor_ = llt.matrixL();
            jitter_ = jitter;
            return;
        }
    }
    throw NumericalError("ridge_solve: Cholesky factorization failed after jitter escalation", attempted);
}

SpdSolver SpdSolver::from_factor(Matrix lower, double lambda, double jitter)
{
    SpdSolver s;
    s.factor_ = std::move(lower);
    s.lambda_ = lambda;
    s.jitter_ = jitter;
    return s;
}

Matrix SpdSolver::solve(const Eigen::Ref<const Matrix>& B) const
{
    if (B.rows() != factor_.rows()) {
        throw InputError("ridge_solve: right-hand side has " + std::to_string(B.rows()) + " rows, expected " +
                         std::to_string(factor_.rows()));
    }
    Matrix X = factor_.triangularView<Eigen::Lower>().solve(B);
    factor_.triangularView<Eigen::Lower>().transpose().solveInPlace(X);
    return X;
}

Matrix ridge_solve(const Eigen::Ref<const Matrix>& K, const Eigen::Ref<const Matrix>& B, double lambda)
{
    return SpdSolver(K, lambda).solve(B);
}

Matrix pinv(const Eigen::Ref<const Matrix>& M, double rtol)
{
    if (rtol < 0.0) throw InputError("pinv: rtol must be non-negative");
    if (M.size() == 0) return Matrix::Zero(M.cols(), M.rows());
    Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double smax = s.size() > 0 ? s[0] : 0.0;
    Vector inv = Vector::Zero(s.size());
    if (smax > 0.0) {
        for (Index i = 0; i < s.size(); ++i) {
            if (s[i] > rtol * smax) inv[i] = 1.0 / s[i];
        }
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

namespace {

TruncatedSvd assemble(const SymmetricSpectrum& spec, Index r)
{
    TruncatedSvd out;
    out.all_singular_values = spec.values;
    out.modes = spec.vectors.leftCols(r);
    out.singular_values = spec.values.head(r);
    const double total = spec.values.squaredNorm();
    out.energy_fraction = total > 0.0 ? spec.values.head(r).squaredNorm() / total : 1.0;
    return out;
}

SymmetricSpectrum psd_spectrum(const Eigen::Ref<const Matrix>& K)
{
    require_square(K, "truncated_svd");
    require_symmetric(K, 1e-8, "truncated_svd");
    SymmetricSpectrum spec = descending_spectrum(K);
    const double scale = spec.values.size() > 0 ? spec.values.cwiseAbs().maxCoeff() : 0.0;
    if (spec.values.size() > 0 && spec.values.minCoeff() < -1e-8 * scale) {
        throw NumericalError("truncated_svd: matrix is not positive semidefinite (min eigenvalue " +
                             std::to_string(spec.values.minCoeff()) + ")");
    }
    spec.values = spec.values.cwiseMax(0.0);
    return spec;
}

}  // namespace

TruncatedSvd truncated_svd(const Eigen::Ref<const Matrix>& K, double tau_percent)
{
    if (!(tau_percent > 0.0 && tau_percent <= 100.0)) {
        throw InputError("truncated_svd: tau must lie in (0, 100], got " + std::to_string(tau_percent));
    }
    const SymmetricSpectrum spec = psd_spectrum(K);
    const Index n = spec.values.size();
    if (n == 0) return assemble(spec, 0);

    const Vector& s = spec.values;
    const double smax = s[0];
    Index r = 0;
    if (tau_percent == 100.0) {
        const double cutoff = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * smax;
        while (r < n && s[r] > cutoff) ++r;
        r = std::max<Index>(r, 1);
    } else {
        const double total = s.squaredNorm();
        double cumulative = 0.0;
        while (r < n) {
            cumulative += s[r] * s[r];
            ++r;
            if (cumulative * 100.0 >= tau_percent * total) break;
        }
    }
    const double tie_tol = 1e-12 * smax;
    while (r < n && std::abs(s[r] - s[r - 1]) <= tie_tol) ++r;
    return assemble(spec, r);
}

TruncatedSvd truncated_svd_rank(const Eigen::Ref<const Matrix>& K, Index r)
{
    const SymmetricSpectrum spec = psd_spectrum(K);
    if (r < 1 || r > spec.values.size()) {
        throw InputError("truncated_svd: rank " + std::to_string(r) + " out of range");
    }
    return assemble(spec, r);
}

double relative_min_eigenvalue(const Eigen::Ref<const Matrix>& K)
{
    require_square(K, "relative_min_eigenvalue");
    Eigen::SelfAdjointEigenSolver<Matrix> es(K, Eigen::EigenvaluesOnly);
    const Vector& ev = es.eigenvalues();
    const double scale = ev.cwiseAbs().maxCoeff();
    return scale > 0.0 ? ev.minCoeff() / scale : 0.0;
}

}  // namespace ckor
