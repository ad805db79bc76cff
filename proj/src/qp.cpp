#include "ckor/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "ckor/error.hpp"

namespace ckor {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kEqualityRhoScale = 1e3;

double inf_norm(const Vector& v) { return v.size() > 0 ? v.cwiseAbs().maxCoeff() : 0.0; }

Vector clamp(const Vector& v, const Vector& lo, const Vector& hi) { return v.cwiseMax(lo).cwiseMin(hi); }

struct Stacked {
    Matrix A;  // [I; G]
    Vector l;
    Vector u;
};

Stacked stack(const QuadraticProgram& qp)
{
    const Index n = qp.size();
    const Index g = qp.G.rows();
    Stacked s{Matrix(n + g, n), Vector(n + g), Vector(n + g)};
    s.A.topRows(n).setIdentity();
    if (g > 0) s.A.bottomRows(g) = qp.G;
    s.l << qp.lower, qp.g_lower;
    s.u << qp.upper, qp.g_upper;
    return s;
}

Vector row_rho(const Stacked& s, double rho)
{
    Vector r(s.l.size());
    for (Index i = 0; i < r.size(); ++i) {
        if (!std::isfinite(s.l[i]) && !std::isfinite(s.u[i])) {
            r[i] = kRhoMin;
        } else if (s.l[i] == s.u[i]) {
            r[i] = kEqualityRhoScale * rho;
        } else {
            r[i] = rho;
        }
    }
    return r;
}

Eigen::LLT<Matrix> factor_kkt(const QuadraticProgram& qp, const Stacked& s, const Vector& rho, double sigma)
{
    Matrix K = qp.P;
    K.diagonal().array() += sigma;
    K.noalias() += s.A.transpose() * rho.asDiagonal() * s.A;
    Eigen::LLT<Matrix> llt(K);
    if (llt.info() != Eigen::Success) throw NumericalError("solve_qp: KKT factorization failed (is P PSD?)");
    return llt;
}

struct Residuals {
    double primal;
    double dual;
    double violation;
};

Residuals kkt_residuals(const QuadraticProgram& qp, const Stacked& s, const Vector& x, const Vector& y)
{
    const Vector Ax = s.A * x;
    const Vector grad = qp.P * x + qp.q + s.A.transpose() * y;
    const double violation = inf_norm(Ax - clamp(Ax, s.l, s.u));
    return {violation, inf_norm(grad), violation};
}

// Solve the equality-constrained problem on the guessed active set and keep
// it when it is a better KKT point than the ADMM iterate.
bool polish(const QuadraticProgram& qp, const Stacked& s, const Vector& z, Vector& x, Vector& y, double tol)
{
    const Index n = qp.size();
    const Index m = s.A.rows();
    std::vector<Index> active;
    std::vector<double> target;
    for (Index i = 0; i < m; ++i) {
        const bool lower_active = std::isfinite(s.l[i]) && (z[i] - s.l[i] < -y[i] || s.l[i] == s.u[i]);
        const bool upper_active = std::isfinite(s.u[i]) && (s.u[i] - z[i] < y[i]);
        if (lower_active) {
            active.push_back(i);
            target.push_back(s.l[i]);
        } else if (upper_active) {
            active.push_back(i);
            target.push_back(s.u[i]);
        }
    }
    const auto k = static_cast<Index>(active.size());
    Matrix Aact(k, n);
    Vector b(k);
    for (Index j = 0; j < k; ++j) {
        Aact.row(j) = s.A.row(active[static_cast<std::size_t>(j)]);
        b[j] = target[static_cast<std::size_t>(j)];
    }

    Matrix kkt = Matrix::Zero(n + k, n + k);
    kkt.topLeftCorner(n, n) = qp.P;
    kkt.topRightCorner(n, k) = Aact.transpose();
    kkt.bottomLeftCorner(k, n) = Aact;
    Matrix reg = kkt;
    const double delta = 1e-9;
    reg.topLeftCorner(n, n).diagonal().array() += delta;
    if (k > 0) reg.bottomRightCorner(k, k).diagonal().array() -= delta;
    const Eigen::PartialPivLU<Matrix> lu(reg);

    Vector rhs(n + k);
    rhs << -qp.q, b;
    Vector sol = lu.solve(rhs);
    for (int it = 0; it < 5; ++it) sol += lu.solve(rhs - kkt * sol);
    if (!sol.allFinite()) return false;

    Vector x_pol = sol.head(n);
    Vector y_pol = Vector::Zero(m);
    for (Index j = 0; j < k; ++j) y_pol[active[static_cast<std::size_t>(j)]] = sol[n + j];

    // Multiplier signs: negative at a lower bound, positive at an upper bound.
    for (Index j = 0; j < k; ++j) {
        const Index i = active[static_cast<std::size_t>(j)];
        if (s.l[i] == s.u[i]) continue;
        const bool at_lower = b[j] == s.l[i];
        if ((at_lower && y_pol[i] > tol) || (!at_lower && y_pol[i] < -tol)) return false;
    }

    const Residuals before = kkt_residuals(qp, s, x, y);
    const Residuals after = kkt_residuals(qp, s, x_pol, y_pol);
    if (after.primal <= std::max(before.primal, tol) && after.dual <= std::max(before.dual, tol)) {
        x = std::move(x_pol);
        y = std::move(y_pol);
        return true;
    }
    return false;
}

}  // namespace

double QuadraticProgram::objective(const Vector& x) const { return 0.5 * x.dot(P * x) + q.dot(x) + constant; }

void QuadraticProgram::validate() const
{
    const Index n = size();
    if (P.rows() != n || P.cols() != n) throw InputError("QP: P must be square and match q");
    if (lower.size() != n || upper.size() != n) throw InputError("QP: variable bounds have wrong size");
    if (G.rows() > 0 && G.cols() != n) throw InputError("QP: constraint matrix has wrong width");
    if (g_lower.size() != G.rows() || g_upper.size() != G.rows()) throw InputError("QP: constraint bounds have wrong size");
    if ((lower.array() > upper.array()).any() || (g_lower.array() > g_upper.array()).any()) {
        throw InputError("QP: lower bound exceeds upper bound");
    }
}

QuadraticProgram QuadraticProgram::unconstrained(Matrix P, Vector q)
{
    const Index n = q.size();
    QuadraticProgram qp;
    qp.P = std::move(P);
    qp.q = std::move(q);
    qp.lower = Vector::Constant(n, -kInf);
    qp.upper = Vector::Constant(n, kInf);
    qp.G = Matrix(0, n);
    qp.g_lower = Vector(0);
    qp.g_upper = Vector(0);
    return qp;
}

QpSolution solve_qp(const QuadraticProgram& qp, const QpSettings& settings, const std::optional<Vector>& warm_x,
                    const std::optional<Vector>& warm_y)
{
    qp.validate();
    if (!(settings.tol > 0.0) || settings.max_iter < 1) throw InputError("QP: invalid solver settings");
    const Stacked s = stack(qp);
    const Index n = qp.size();
    const Index m = s.A.rows();

    double rho_scalar = settings.rho;
    Vector rho = row_rho(s, rho_scalar);
    Eigen::LLT<Matrix> kkt = factor_kkt(qp, s, rho, settings.sigma);

    Vector x = warm_x && warm_x->size() == n ? *warm_x : Vector::Zero(n);
    Vector z = clamp(s.A * x, s.l, s.u);
    Vector y = warm_y && warm_y->size() == m ? *warm_y : Vector::Zero(m);

    QpSolution best;
    double best_score = kInf;
    bool converged = false;
    int iter = 0;
    for (iter = 1; iter <= settings.max_iter; ++iter) {
        const Vector rhs = settings.sigma * x - qp.q + s.A.transpose() * (rho.cwiseProduct(z) - y);
        const Vector x_tilde = kkt.solve(rhs);
        const Vector z_tilde = s.A * x_tilde;
        x = settings.alpha * x_tilde + (1.0 - settings.alpha) * x;
        const Vector z_relaxed = settings.alpha * z_tilde + (1.0 - settings.alpha) * z;
        const Vector z_next = clamp(z_relaxed + y.cwiseQuotient(rho), s.l, s.u);
        y += rho.cwiseProduct(z_relaxed - z_next);
        z = z_next;

        const Vector Ax = s.A * x;
        const Vector Px = qp.P * x;
        const Vector ATy = s.A.transpose() * y;
        const double r_prim = inf_norm(Ax - z);
        const double r_dual = inf_norm(Px + qp.q + ATy);
        const double prim_scale = std::max(inf_norm(Ax), inf_norm(z));
        const double dual_scale = std::max({inf_norm(Px), inf_norm(ATy), inf_norm(qp.q)});
        const double eps_prim = settings.tol * (1.0 + prim_scale);
        const double eps_dual = settings.tol * (1.0 + dual_scale);

        const double score = std::max(r_prim / eps_prim, r_dual / eps_dual);
        if (score < best_score) {
            best_score = score;
            best.x = x;
            best.y = y;
        }
        if (r_prim <= eps_prim && r_dual <= eps_dual) {
            converged = true;
            break;
        }
        if (settings.adaptive_rho && iter % settings.adapt_interval == 0) {
            const double num = r_prim / std::max(prim_scale, 1e-12);
            const double den = r_dual / std::max(dual_scale, 1e-12);
            if (den > 0.0 && num > 0.0) {
                const double proposed = std::clamp(rho_scalar * std::sqrt(num / den), kRhoMin, kRhoMax);
                if (proposed > 5.0 * rho_scalar || proposed < 0.2 * rho_scalar) {
                    rho_scalar = proposed;
                    rho = row_rho(s, rho_scalar);
                    kkt = factor_kkt(qp, s, rho, settings.sigma);
                }
            }
        }
    }

    QpSolution sol;
    sol.iterations = std::min(iter, settings.max_iter);
    if (converged) {
        sol.x = x;
        sol.y = y;
    } else {
        sol.x = best.x;
        sol.y = best.y;
        z = clamp(s.A * sol.x, s.l, s.u);
    }
    if (settings.polish) sol.polished = polish(qp, s, z, sol.x, sol.y, settings.tol);

    const Residuals res = kkt_residuals(qp, s, sol.x, sol.y);
    sol.primal_residual = res.primal;
    sol.dual_residual = res.dual;
    sol.converged = converged || (sol.polished && res.primal <= settings.tol && res.dual <= settings.tol);
    sol.objective = qp.objective(sol.x);
    return sol;
}

}  // namespace ckor
