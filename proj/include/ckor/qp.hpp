#pragma once

#include <optional>

#include "ckor/types.hpp"

namespace ckor {

/// Dense convex QP
///
///   minimize    1/2 x^T P x + q^T x + constant
///   subject to  lower <= x <= upper
///               g_lower <= G x <= g_upper
///
/// Infinite bounds are allowed on either side.
struct QuadraticProgram {
    Matrix P;
    Vector q;
    double constant = 0.0;
    Vector lower;
    Vector upper;
    Matrix G;
    Vector g_lower;
    Vector g_upper;

    Index size() const noexcept { return q.size(); }
    double objective(const Vector& x) const;
    /// Throws InputError on inconsistent shapes or crossed bounds.
    void validate() const;

    /// Unconstrained problem of the given size (bounds at +-inf, no rows in G).
    static QuadraticProgram unconstrained(Matrix P, Vector q);
};

struct QpSettings {
    double tol = 1e-6;
    int max_iter = 20000;
    double rho = 0.1;
    double sigma = 1e-6;
    double alpha = 1.6;
    bool adaptive_rho = true;
    int adapt_interval = 25;
    bool polish = true;
};

struct QpSolution {
    Vector x;
    Vector y;  // multipliers for the stacked constraints [I; G]
    double objective = 0.0;
    double primal_residual = 0.0;  // max constraint violation
    double dual_residual = 0.0;    // |P x + q + A^T y|_inf
    int iterations = 0;
    bool converged = false;
    bool polished = false;
};

/// Operator-splitting (ADMM) solver with adaptive penalty and an active-set
/// polishing step. Deterministic for identical inputs and warm starts.
QpSolution solve_qp(const QuadraticProgram& qp, const QpSettings& settings = {},
                    const std::optional<Vector>& warm_x = std::nullopt,
                    const std::optional<Vector>& warm_y = std::nullopt);

}  // namespace ckor
