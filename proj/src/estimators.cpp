#include "ckor/estimators.hpp"

#include <cmath>
#include <string>

#include "ckor/error.hpp"

namespace ckor {

std::string_view to_string(ModelFlavor flavor)
{
    return flavor == ModelFlavor::Full ? "full" : "nystrom";
}

Index Observable::dim(Index state_dim) const
{
    return is_full_state() ? state_dim : static_cast<Index>(coordinates.size());
}

Matrix Observable::evaluate(const Eigen::Ref<const Matrix>& states) const
{
    if (is_full_state()) return states;
    Matrix out(states.rows(), static_cast<Index>(coordinates.size()));
    for (std::size_t k = 0; k < coordinates.size(); ++k) {
        const Index c = coordinates[k];
        if (c < 0 || c >= states.cols()) throw InputError("observable coordinate " + std::to_string(c) + " out of range");
        out.col(static_cast<Index>(k)) = states.col(c);
    }
    return out;
}

// ---------------------------------------------------------------- Lifting

Vector Lifting::state_vector(const Eigen::Ref<const Vector>& x) const
{
    return kernel_vector(state_kernel, x_anchor, x);
}

Vector Lifting::control_vector(const Eigen::Ref<const Vector>& u) const
{
    return kernel_vector(control_kernel, u_anchor, u);
}

Vector Lifting::operator()(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u) const
{
    Vector z = state_vector(x);
    z.array() *= 1.0 + control_vector(u).array();
    return z;
}

Matrix Lifting::batch(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Matrix>& U) const
{
    return composite_gram({state_kernel, control_kernel}, X, U, x_anchor, u_anchor);
}

// ---------------------------------------------------------------- RegressionOperator

Matrix RegressionOperator::apply(const Eigen::Ref<const Matrix>& rhs) const
{
    if (const auto* solver = std::get_if<SpdSolver>(&impl_)) return solver->solve(rhs);
    const Matrix& op = std::get<Matrix>(impl_);
    if (rhs.rows() != op.cols()) throw InputError("regression operator: right-hand side has wrong row count");
    return op * rhs;
}

// ---------------------------------------------------------------- fitting

namespace {

void check_fit_inputs(const SnapshotDataset& ds, double gamma)
{
    ds.validate();
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw InputError("regularization gamma must be positive, got " + std::to_string(gamma));
    }
}

// Upper-triangle-free M^T M, exactly symmetric.
Matrix gram_product(const Matrix& M)
{
    Matrix G = Matrix::Zero(M.cols(), M.cols());
    G.selfadjointView<Eigen::Lower>().rankUpdate(M.transpose());
    return G.selfadjointView<Eigen::Lower>();
}

Matrix stacked_ridge_factor(const Matrix& K_cross, const Matrix& K_anchor, double ridge)
{
    const Index n = K_cross.rows();
    const Index m = K_cross.cols();
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(K_anchor);
    if (eig.info() != Eigen::Success) throw NumericalError("fit_ny_ckor: eigendecomposition of the inducing Gram failed");
    const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    Matrix S(n + m, m);
    S.topRows(n) = K_cross;
    S.bottomRows(m) = std::sqrt(ridge) * root.asDiagonal() * eig.eigenvectors().transpose();
    return S;
}

}  // namespace

std::vector<Matrix> control_channels(const CkorModel& model)
{
    if (!model.lifting.linear_control()) {
        throw UnsupportedError("control channels B_i exist only for the linear control kernel");
    }
    std::vector<Matrix> B;
    B.reserve(static_cast<std::size_t>(model.input_dim()));
    for (Index i = 0; i < model.input_dim(); ++i) B.push_back(model.lifting.u_anchor.col(i).asDiagonal() * model.A);
    return B;
}

CkorModel fit_ckor(const SnapshotDataset& ds, const KernelSpec& state_kernel, const KernelSpec& control_kernel,
                   double gamma, const Observable& observable)
{
    check_fit_inputs(ds, gamma);
    const Index n = ds.size();
    const CompositeControlKernel ck{state_kernel, control_kernel};

    const Matrix KZ = composite_gram(ck, ds.X, ds.U);
    const Matrix Yp = observable.evaluate(ds.X_plus);

    // Stacked right-hand side [K_+ | Y_+] with (K_+)_ij = k_X(x+_i, x_j).
    Matrix rhs(n, n + Yp.cols());
    rhs.leftCols(n) = gram(state_kernel, ds.X_plus, ds.X);
    rhs.rightCols(Yp.cols()) = Yp;

    SpdSolver solver;
    try {
        solver = SpdSolver(KZ, static_cast<double>(n) * gamma);
    } catch (const NumericalError& e) {
        throw NumericalError(std::string("fit_ckor: ") + e.what(), e.attempted_jitter());
    }
    const Matrix W = solver.solve(rhs);

    CkorModel model;
    model.lifting = Lifting{state_kernel, control_kernel, ds.X, ds.U};
    model.xplus_anchor = ds.X_plus;
    model.A = W.leftCols(n).transpose();
    model.C = W.rightCols(Yp.cols()).transpose();
    model.observable = observable;
    model.gamma = gamma;
    model.flavor = ModelFlavor::Full;
    model.regression = RegressionOperator(std::move(solver));
    model.training_size = n;
    return model;
}

CkorModel fit_ny_ckor(const SnapshotDataset& ds, const InducingSet& inducing, const KernelSpec& state_kernel,
                      const KernelSpec& control_kernel, double gamma, const Observable& observable, double pinv_rtol)
{
    check_fit_inputs(ds, gamma);
    const Index n = ds.size();
    const Index m = inducing.size();
    if (m < 1 || m > n) throw InputError("fit_ny_ckor: inducing set size must lie in [1, n]");
    if (inducing.X.cols() != ds.state_dim() || inducing.U.cols() != ds.input_dim()) {
        throw InputError("fit_ny_ckor: inducing set dimensions do not match the dataset");
    }
    const CompositeControlKernel ck{state_kernel, control_kernel};

    const Matrix KZt = composite_gram(ck, inducing.X, inducing.U);                  // m x m
    const Matrix KZZt = composite_gram(ck, ds.X, ds.U, inducing.X, inducing.U);     // n x m
    const Matrix KPPt = gram(state_kernel, ds.X_plus, inducing.X_plus);             // n x m
    const Matrix KPt = gram(state_kernel, inducing.X_plus);                         // m x m

    // H^+ K_ZZ~^T with H = K_ZZ~^T K_ZZ~ + n gamma K_Z~, computed as the
    // pseudo-inverse of the stacked factor S = [K_ZZ~; sqrt(n gamma) K_Z~^(1/2)]
    // so the conditioning of H is never squared. H = S^T S, so cutting the
    // singular values of S at sqrt(rtol) truncates H at rtol.
    const Matrix stacked_pinv =
        pinv(stacked_ridge_factor(KZZt, KZt, static_cast<double>(n) * gamma), std::sqrt(pinv_rtol));

    // Nystrom interpolation of successor sections: K_{+~+} K_~+^+.
    const Matrix interp = KPPt * pinv(KPt, pinv_rtol);  // n x m
    const Matrix op = stacked_pinv.leftCols(n) * interp;

    // Successor sections evaluated at the inducing states, k_X(x~+_i, x~_j),
    // so that A acts on the lifting k_X(x, x~) .* (1 + k_U(u, u~)).
    const Matrix KPtX = gram(state_kernel, inducing.X_plus, inducing.X);
    const Matrix Ypt = observable.evaluate(inducing.X_plus);

    CkorModel model;
    model.lifting = Lifting{state_kernel, control_kernel, inducing.X, inducing.U};
    model.xplus_anchor = inducing.X_plus;
    model.A = (op * KPtX).transpose();
    model.C = (op * Ypt).transpose();
    if (!model.A.allFinite() || !model.C.allFinite()) throw NumericalError("fit_ny_ckor: non-finite model matrices");
    model.observable = observable;
    model.gamma = gamma;
    model.flavor = ModelFlavor::Nystrom;
    model.regression = RegressionOperator(op);
    model.training_size = n;
    return model;
}

// ---------------------------------------------------------------- bEDMDc

Vector BedmdcModel::lift(const Eigen::Ref<const Vector>& x) const
{
    return kernel_vector(state_kernel, centers, x);
}

Eigen::Ref<const Matrix> BedmdcModel::block(Index channel) const
{
    const Index m = lifted_dim();
    return op.middleCols(channel * m, m);
}

BedmdcModel fit_bedmdc(const SnapshotDataset& ds, const InducingSet& centers, const KernelSpec& state_kernel,
                       double gamma, const Observable& observable)
{
    check_fit_inputs(ds, gamma);
    if (centers.X.cols() != ds.state_dim()) throw InputError("fit_bedmdc: centre dimension does not match states");
    const Index n = ds.size();
    const Index m = centers.size();
    const Index nu = ds.input_dim();
    const Index width = m * (nu + 1);

    const Matrix Psi = gram(state_kernel, ds.X, centers.X);          // n x m
    const Matrix PsiPlus = gram(state_kernel, ds.X_plus, centers.X); // n x m

    // Explicit tensor-product regressors [psi, u_1 psi, ..., u_nu psi].
    Matrix Phi(n, width);
    Phi.leftCols(m) = Psi;
    for (Index i = 0; i < nu; ++i) Phi.middleCols((i + 1) * m, m) = ds.U.col(i).asDiagonal() * Psi;

    const double lambda = static_cast<double>(n) * gamma;
    const Matrix W = ridge_solve(gram_product(Phi), Phi.transpose() * PsiPlus, lambda);  // width x m

    const Matrix Yp = observable.evaluate(ds.X_plus);
    const Matrix readout = ridge_solve(gram_product(PsiPlus), PsiPlus.transpose() * Yp, lambda);

    BedmdcModel model;
    model.state_kernel = state_kernel;
    model.centers = centers.X;
    model.op = W.transpose();
    model.C = readout.transpose();
    model.observable = observable;
    model.input_dim = nu;
    model.gamma = gamma;
    return model;
}

// ---------------------------------------------------------------- POD

Vector ReducedModel::lift(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u) const
{
    return V.transpose() * lifting(x, u);
}

ReducedModel pod_reduce(const CkorModel& model, const PodTruncation& truncation)
{
    if (!model.lifting.linear_control()) {
        throw UnsupportedError("pod_reduce: the bilinear channel form requires the linear control kernel");
    }
    const Matrix K = composite_gram({model.lifting.state_kernel, model.lifting.control_kernel},
                                    model.lifting.x_anchor, model.lifting.u_anchor);
    TruncatedSvd svd;
    if (truncation.rank) {
        svd = truncated_svd_rank(K, *truncation.rank);
    } else {
        svd = truncated_svd(K, truncation.tau_percent.value_or(100.0));
    }

    ReducedModel reduced;
    reduced.lifting = model.lifting;
    reduced.V = svd.modes;
    reduced.singular_values = svd.singular_values;
    reduced.energy_fraction = svd.energy_fraction;
    reduced.A = svd.modes.transpose() * model.A * svd.modes;
    for (const Matrix& Bi : control_channels(model)) reduced.B.push_back(svd.modes.transpose() * Bi * svd.modes);
    reduced.C = model.C * svd.modes;
    reduced.observable = model.observable;
    reduced.gamma = model.gamma;
    reduced.parent_flavor = model.flavor;
    return reduced;
}

}  // namespace ckor
