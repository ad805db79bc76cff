#pragma once

#include <vector>

#include "ckor/estimators.hpp"
#include "ckor/types.hpp"

namespace ckor {

/// Lifted states above this infinity norm abort a rollout.
inline constexpr double kLiftedDivergenceThreshold = 1e12;

/// Multi-step prediction. Row k-1 of `lifted` / `outputs` belongs to step k = 1..H;
/// no prediction is produced for k = 0 (the initial state is known).
struct Rollout {
    Matrix lifted;   // H x N
    Matrix outputs;  // H x n_y
};

/// z_1 = z(x0, u_0); z_{k+1} = (A + diag(k_U(u_k)) A) z_k; y_k = C z_k.
Rollout rollout(const CkorModel& model, const Vector& x0, const Eigen::Ref<const Matrix>& inputs);

/// Same recursion on the POD coordinates, z_1 = V^T z(x0, u_0).
Rollout rollout(const ReducedModel& model, const Vector& x0, const Eigen::Ref<const Matrix>& inputs);

/// psi_0 = psi(x0); psi_{k+1} = A psi_k + sum_i u_{k,i} B_i psi_k; y_k = C psi_k (k >= 1).
Rollout rollout(const BedmdcModel& model, const Vector& x0, const Eigen::Ref<const Matrix>& inputs);

/// One-step predictions y_hat(x_i, u_i) for each row pair.
Matrix predict_one_step(const CkorModel& model, const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Matrix>& U);
Matrix predict_one_step(const ReducedModel& model, const Eigen::Ref<const Matrix>& X,
                        const Eigen::Ref<const Matrix>& U);
Matrix predict_one_step(const BedmdcModel& model, const Eigen::Ref<const Matrix>& X,
                        const Eigen::Ref<const Matrix>& U);

/// Time-varying LPV form z+ = A z + B(p_k) u with B(p) = [B_1 p | ... | B_nu p].
struct LpvSequence {
    Matrix A;
    std::vector<Matrix> B;  // one N x n_u matrix per schedule entry
};

/// Schedule rows are lifted states p_0..p_{H-1}.
LpvSequence lpv_matrices(const CkorModel& model, const Eigen::Ref<const Matrix>& schedule);
LpvSequence lpv_matrices(const ReducedModel& model, const Eigen::Ref<const Matrix>& schedule);

/// Readout for a new observable: C' = (R Y)^T with R the stored regression
/// operator and Y the observable at the anchor successors (N x n_y).
Matrix readout_for(const CkorModel& model, const Eigen::Ref<const Matrix>& observable_at_anchors);

/// Predictions y'_k = C' z_k along the rollout, H x n_y.
Matrix predict_observable(const CkorModel& model, const Vector& x0, const Eigen::Ref<const Matrix>& inputs,
                          const Eigen::Ref<const Matrix>& observable_at_anchors);

}  // namespace ckor
