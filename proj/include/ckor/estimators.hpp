#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "ckor/data.hpp"
#include "ckor/kernels.hpp"
#include "ckor/numerics.hpp"
#include "ckor/types.hpp"

namespace ckor {

enum class ModelFlavor { Full, Nystrom };

std::string_view to_string(ModelFlavor flavor);

/// Observable y(x): a list of state coordinates, or the full state when empty.
struct Observable {
    std::vector<Index> coordinates;

    static Observable full_state() { return {}; }
    bool is_full_state() const noexcept { return coordinates.empty(); }
    Index dim(Index state_dim) const;
    /// Rows of `states` mapped through y.
    Matrix evaluate(const Eigen::Ref<const Matrix>& states) const;

    bool operator==(const Observable&) const = default;
};

/// Lifting z(x, u) = k_X(x) .* (1 + k_U(u)) over a set of anchor points.
struct Lifting {
    KernelSpec state_kernel = KernelSpec::linear();
    KernelSpec control_kernel = KernelSpec::linear();
    Matrix x_anchor;  // N x n_x
    Matrix u_anchor;  // N x n_u

    Index dim() const noexcept { return x_anchor.rows(); }
    Index state_dim() const noexcept { return x_anchor.cols(); }
    Index input_dim() const noexcept { return u_anchor.cols(); }

    Vector state_vector(const Eigen::Ref<const Vector>& x) const;
    Vector control_vector(const Eigen::Ref<const Vector>& u) const;
    Vector operator()(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u) const;
    /// Lifted rows for a batch of (x, u) pairs: rows x N.
    Matrix batch(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Matrix>& U) const;
    bool linear_control() const noexcept { return control_kernel.family() == KernelFamily::Linear; }
};

/// The regression map (K_reg^{-1} for full fits, the sketched operator for
/// Nystrom fits) kept in reusable form so new readouts need no refit.
class RegressionOperator {
public:
    RegressionOperator() = default;
    explicit RegressionOperator(SpdSolver solver) : impl_(std::move(solver)) {}
    explicit RegressionOperator(Matrix explicit_operator) : impl_(std::move(explicit_operator)) {}

    /// Operator applied to the anchor-evaluated right-hand side.
    Matrix apply(const Eigen::Ref<const Matrix>& rhs) const;

    bool is_factorized() const noexcept { return std::holds_alternative<SpdSolver>(impl_); }
    const SpdSolver& solver() const { return std::get<SpdSolver>(impl_); }
    const Matrix& explicit_operator() const { return std::get<Matrix>(impl_); }

private:
    std::variant<SpdSolver, Matrix> impl_;
};

/// Fitted cKOR / Ny-cKOR predictor: z+ = (A + diag(k_U(u)) A) z, y = C z.
struct CkorModel {
    Lifting lifting;
    Matrix xplus_anchor;  // successors of the anchors (N x n_x)
    Matrix A;             // N x N
    Matrix C;             // n_y x N
    Observable observable;
    double gamma = 0.0;
    ModelFlavor flavor = ModelFlavor::Full;
    RegressionOperator regression;
    Index training_size = 0;

    Index lifted_dim() const noexcept { return A.rows(); }
    Index state_dim() const noexcept { return lifting.state_dim(); }
    Index input_dim() const noexcept { return lifting.input_dim(); }
    Index output_dim() const noexcept { return C.rows(); }
};

/// Control channels B_i = diag(U e_i) A; defined for the linear control kernel only.
std::vector<Matrix> control_channels(const CkorModel& model);

/// Full control Koopman operator regression (n anchors).
CkorModel fit_ckor(const SnapshotDataset& ds, const KernelSpec& state_kernel, const KernelSpec& control_kernel,
                   double gamma, const Observable& observable = Observable::full_state());

/// Nystrom-sketched estimator over the inducing set (m anchors). `pinv_rtol`
/// is the relative eigenvalue cutoff of the pseudo-inverses of the ridge
/// system and of the successor Gram.
CkorModel fit_ny_ckor(const SnapshotDataset& ds, const InducingSet& inducing, const KernelSpec& state_kernel,
                      const KernelSpec& control_kernel, double gamma,
                      const Observable& observable = Observable::full_state(), double pinv_rtol = kDefaultPinvRtol);

/// Bilinear EDMD with control over the kernel dictionary psi(x) = [k_X(x, c_j)]_j.
///
/// The operator acts on [psi; u_1 psi; ...; u_nu psi] and is stored as
/// [A | B_1 | ... | B_nu] (m x m(n_u+1)).
struct BedmdcModel {
    KernelSpec state_kernel = KernelSpec::linear();
    Matrix centers;   // m x n_x
    Matrix op;        // m x m(n_u+1)
    Matrix C;         // n_y x m
    Observable observable;
    Index input_dim = 0;
    double gamma = 0.0;

    Index lifted_dim() const noexcept { return centers.rows(); }
    Index state_dim() const noexcept { return centers.cols(); }
    Index output_dim() const noexcept { return C.rows(); }
    Vector lift(const Eigen::Ref<const Vector>& x) const;
    Eigen::Ref<const Matrix> block(Index channel) const;  // 0 = A, i = B_i
};

BedmdcModel fit_bedmdc(const SnapshotDataset& ds, const InducingSet& centers, const KernelSpec& state_kernel,
                       double gamma, const Observable& observable = Observable::full_state());

/// POD-reduced bilinear model z_r+ = (A_r + sum u_i B_{i,r}) z_r with z_r = V^T z.
struct ReducedModel {
    Lifting lifting;
    Matrix V;                 // N x r
    Vector singular_values;   // r retained values
    double energy_fraction = 1.0;
    Matrix A;                 // r x r
    std::vector<Matrix> B;    // n_u matrices, r x r
    Matrix C;                 // n_y x r
    Observable observable;
    double gamma = 0.0;
    ModelFlavor parent_flavor = ModelFlavor::Full;

    Index lifted_dim() const noexcept { return A.rows(); }
    Index state_dim() const noexcept { return lifting.state_dim(); }
    Index input_dim() const noexcept { return lifting.input_dim(); }
    Index output_dim() const noexcept { return C.rows(); }
    Vector lift(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u) const;
};

/// Either an energy threshold (percent) or a fixed rank.
struct PodTruncation {
    std::optional<double> tau_percent;
    std::optional<Index> rank;

    static PodTruncation threshold(double tau) { return {tau, std::nullopt}; }
    static PodTruncation fixed_rank(Index r) { return {std::nullopt, r}; }
};

ReducedModel pod_reduce(const CkorModel& model, const PodTruncation& truncation);

}  // namespace ckor
