#include "ckor/kernels.hpp"

#include <cmath>
#include <string>

#include "ckor/error.hpp"

namespace ckor {

namespace {

// Works on raw rows so Gram assembly avoids per-entry temporaries.
template <class RowA, class RowB>
double eval_rows(const KernelSpec& spec, const RowA& a, const RowB& b)
{
    const Index d = a.size();
    switch (spec.family()) {
    case KernelFamily::Gaussian: {
        double acc = 0.0;
        for (Index i = 0; i < d; ++i) {
            const double diff = a[i] - b[i];
            acc += diff * diff;
        }
        return std::exp(-acc / spec.bandwidth());
    }
    case KernelFamily::Linear: {
        double acc = 0.0;
        for (Index i = 0; i < d; ++i) acc += a[i] * b[i];
        return acc;
    }
    case KernelFamily::LinearPlusIdentityAugmentation: {
        double sq = 0.0;
        double ip = 0.0;
        for (Index i = 0; i < d; ++i) {
            const double diff = a[i] - b[i];
            sq += diff * diff;
            ip += a[i] * b[i];
        }
        return std::exp(-sq / spec.bandwidth()) + ip;
    }
    }
    return 0.0;
}

void check_columns(Index a, Index b, const char* what)
{
    if (a != b) {
        throw InputError(std::string(what) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                         std::to_string(b) + ")");
    }
}

}  // namespace

std::string_view to_string(KernelFamily family)
{
    switch (family) {
    case KernelFamily::Gaussian: return "gaussian";
    case KernelFamily::Linear: return "linear";
    case KernelFamily::LinearPlusIdentityAugmentation: return "linear_plus_identity";
    }
    return "unknown";
}

KernelFamily kernel_family_from_string(std::string_view name)
{
    if (name == "gaussian") return KernelFamily::Gaussian;
    if (name == "linear") return KernelFamily::Linear;
    if (name == "linear_plus_identity") return KernelFamily::LinearPlusIdentityAugmentation;
    throw InputError("unknown kernel family '" + std::string(name) + "'");
}

KernelSpec::KernelSpec(KernelFamily family, double bandwidth) : family_(family), bandwidth_(bandwidth)
{
    if (uses_bandwidth() && !(bandwidth > 0.0 && std::isfinite(bandwidth))) {
        throw InputError("kernel bandwidth must be positive and finite, got " + std::to_string(bandwidth));
    }
}

KernelSpec KernelSpec::gaussian(double bandwidth) { return {KernelFamily::Gaussian, bandwidth}; }
KernelSpec KernelSpec::linear() { return {KernelFamily::Linear, 0.0}; }
KernelSpec KernelSpec::linear_plus_identity(double bandwidth)
{
    return {KernelFamily::LinearPlusIdentityAugmentation, bandwidth};
}

double KernelSpec::operator()(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) const
{
    check_columns(a.size(), b.size(), "kernel evaluation");
    return eval_rows(*this, a, b);
}

double eval(const KernelSpec& spec, const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b)
{
    return spec(a, b);
}

Matrix gram(const KernelSpec& spec, const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& B)
{
    check_columns(A.cols(), B.cols(), "gram");
    Matrix K(A.rows(), B.rows());
    // Row-major access pattern on inputs; transpose once so rows become contiguous columns.
    const Matrix At = A.transpose();
    const Matrix Bt = B.transpose();
    for (Index j = 0; j < B.rows(); ++j) {
        const auto bj = Bt.col(j);
        for (Index i = 0; i < A.rows(); ++i) K(i, j) = eval_rows(spec, At.col(i), bj);
    }
    return K;
}

Matrix gram(const KernelSpec& spec, const Eigen::Ref<const Matrix>& A)
{
    const Index n = A.rows();
    Matrix K(n, n);
    const Matrix At = A.transpose();
    for (Index j = 0; j < n; ++j) {
        const auto aj = At.col(j);
        for (Index i = 0; i <= j; ++i) {
            const double v = eval_rows(spec, At.col(i), aj);
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    return K;
}

Vector kernel_vector(const KernelSpec& spec, const Eigen::Ref<const Matrix>& anchors,
                     const Eigen::Ref<const Vector>& x)
{
    check_columns(anchors.cols(), x.size(), "kernel vector");
    Vector k(anchors.rows());
    for (Index i = 0; i < anchors.rows(); ++i) k[i] = eval_rows(spec, x, anchors.row(i));
    return k;
}

double CompositeControlKernel::operator()(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u,
                                          const Eigen::Ref<const Vector>& x2,
                                          const Eigen::Ref<const Vector>& u2) const
{
    return state_kernel(x, x2) * (1.0 + control_kernel(u, u2));
}

Matrix composite_gram(const CompositeControlKernel& ck, const Eigen::Ref<const Matrix>& X,
                      const Eigen::Ref<const Matrix>& U, const Eigen::Ref<const Matrix>& X2,
                      const Eigen::Ref<const Matrix>& U2)
{
    if (X.rows() != U.rows() || X2.rows() != U2.rows()) {
        throw InputError("composite_gram: state and input row counts differ");
    }
    Matrix K = gram(ck.state_kernel, X, X2);
    K.array() *= 1.0 + gram(ck.control_kernel, U, U2).array();
    return K;
}

Matrix composite_gram(const CompositeControlKernel& ck, const Eigen::Ref<const Matrix>& X,
                      const Eigen::Ref<const Matrix>& U)
{
    if (X.rows() != U.rows()) throw InputError("composite_gram: state and input row counts differ");
    Matrix K = gram(ck.state_kernel, X);
    K.array() *= 1.0 + gram(ck.control_kernel, U).array();
    return K;
}

}  // namespace ckor
