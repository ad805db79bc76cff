#pragma once

#include <string>
#include <string_view>

#include "ckor/types.hpp"

namespace ckor {

enum class KernelFamily {
    Gaussian,
    Linear,
    // Gaussian base plus a linear term: k(a,b) = exp(-|a-b|^2/mu) + <a,b>.
    LinearPlusIdentityAugmentation,
};

std::string_view to_string(KernelFamily family);
KernelFamily kernel_family_from_string(std::string_view name);

/// Scalar kernel description. `bandwidth` is the Gaussian width mu in
/// exp(-|a-b|^2 / mu) and is ignored for the linear family.
class KernelSpec {
public:
    static KernelSpec gaussian(double bandwidth);
    static KernelSpec linear();
    static KernelSpec linear_plus_identity(double bandwidth);

    KernelFamily family() const noexcept { return family_; }
    double bandwidth() const noexcept { return bandwidth_; }
    bool uses_bandwidth() const noexcept { return family_ != KernelFamily::Linear; }

    /// k(a, b). Throws InputError on a dimension mismatch.
    double operator()(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) const;

    bool operator==(const KernelSpec&) const = default;

private:
    KernelSpec(KernelFamily family, double bandwidth);

    KernelFamily family_;
    double bandwidth_;
};

double eval(const KernelSpec& spec, const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

/// Gram matrix with entries k(row_i(A), row_j(B)).
Matrix gram(const KernelSpec& spec, const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& B);

/// Self-Gram, computed on the upper triangle and mirrored so it is exactly symmetric.
Matrix gram(const KernelSpec& spec, const Eigen::Ref<const Matrix>& A);

/// Kernel sections k(x, anchor_i) stacked into a vector of length anchors.rows().
Vector kernel_vector(const KernelSpec& spec, const Eigen::Ref<const Matrix>& anchors,
                     const Eigen::Ref<const Vector>& x);

/// Control-affine product kernel k_Z((x,u),(x',u')) = k_X(x,x') * (1 + k_U(u,u')).
struct CompositeControlKernel {
    KernelSpec state_kernel;
    KernelSpec control_kernel;

    double operator()(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u,
                      const Eigen::Ref<const Vector>& x2, const Eigen::Ref<const Vector>& u2) const;
};

/// gram(k_X, X, X2) .* (ones + gram(k_U, U, U2)).
Matrix composite_gram(const CompositeControlKernel& ck, const Eigen::Ref<const Matrix>& X,
                      const Eigen::Ref<const Matrix>& U, const Eigen::Ref<const Matrix>& X2,
                      const Eigen::Ref<const Matrix>& U2);

/// Symmetric variant for (X, U) against itself.
Matrix composite_gram(const CompositeControlKernel& ck, const Eigen::Ref<const Matrix>& X,
                      const Eigen::Ref<const Matrix>& U);

}  // namespace ckor
