#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ckor/estimators.hpp"
#include "ckor/qp.hpp"
#include "ckor/systems.hpp"
#include "ckor/types.hpp"

namespace ckor {

/// Weights, horizon and bounds of the tracking problem. Bounds may be +-inf.
struct MpcProblem {
    Matrix Q;           // n_x x n_x, PSD
    Matrix R;           // n_u x n_u, PD
    Matrix Q_terminal;  // n_x x n_x, PSD, added to Q at the last step
    Index horizon = 1;
    Vector x_min;
    Vector x_max;
    Vector u_min;
    Vector u_max;

    Index state_dim() const noexcept { return Q.rows(); }
    Index input_dim() const noexcept { return R.rows(); }
    void validate() const;

    /// Problem without state or input bounds.
    static MpcProblem unbounded(Matrix Q, Matrix R, Matrix Q_terminal, Index horizon);
};

/// Reference over one horizon: x_ref row i-1 is the target for prediction
/// step i = 1..T, u_ref row j for input j = 0..T-1.
struct MpcReference {
    Matrix x_ref;  // T x n_x
    Matrix u_ref;  // T x n_u

    static MpcReference constant(const Vector& x_bar, const Vector& u_bar, Index horizon);
};

/// Reference generator: horizon reference for the control step `step`.
using ReferenceFn = std::function<MpcReference(Index step, Index horizon)>;

ReferenceFn constant_reference(Vector x_bar, Vector u_bar);

/// Piecewise-constant state reference. `segments` lists (steps, x_bar) pairs;
/// the preview beyond the last segment holds its value. Input reference is zero.
ReferenceFn piecewise_reference(std::vector<std::pair<Index, Vector>> segments, Index input_dim);

/// z+ = A z + (B0 + [B_1 z | ... | B_nu z]) u, y = C z + y_offset.
struct LpvModel {
    Matrix A;
    Matrix B0;                    // N x n_u constant part (zero for bilinear models)
    std::vector<Matrix> channels; // bilinear channels, N x N each (may be empty)
    Matrix C;
    Vector y_offset;
    std::function<Vector(const Vector& x, const Vector& u)> lift;

    Index lifted_dim() const noexcept { return A.rows(); }
    Index input_dim() const noexcept { return B0.cols(); }
    Index output_dim() const noexcept { return C.rows(); }

    /// B(p) = B0 + [B_1 p | ... | B_nu p].
    Matrix input_matrix(const Vector& p) const;
    Vector step(const Vector& z, const Vector& u) const;
    Vector output(const Vector& z) const { return C * z + y_offset; }
    void validate() const;

    static LpvModel from(const CkorModel& model);
    static LpvModel from(const ReducedModel& model);
    /// LTI model on deviations z = x - x_eq with output y = z + x_eq.
    static LpvModel linear(Matrix A, Matrix B, Vector x_eq);
};

/// Condensed QP over the stacked inputs [u_0; ...; u_{T-1}].
///
/// Cost: sum_{i=1..T} |C z_i + c - x_ref_i|^2_{Q_i} + sum_{j=0..T-1} |u_j - u_ref_j|^2_R
/// with Q_i = Q for i < T and Q_T = Q + Q_terminal; z_{i+1} = A z_i + B(p_i) u_i.
/// Input bounds become variable boxes, finite state bounds become rows of G.
QuadraticProgram build_qp(const LpvModel& model, const MpcProblem& problem, const MpcReference& reference,
                          const Vector& z0, const Eigen::Ref<const Matrix>& schedule);

/// Lifted trajectory z_0..z_T under the bilinear dynamics, (T+1) x N.
Matrix simulate_lifted(const LpvModel& model, const Vector& z0, const Eigen::Ref<const Matrix>& inputs);

struct MpcStep {
    Vector u_applied;
    Matrix inputs;    // T x n_u optimal sequence
    Matrix schedule;  // T x N lifted forecast z_0..z_{T-1} under the optimal inputs
    Matrix lifted;    // (T+1) x N forecast z_0..z_T
    QpSolution qp;
};

/// One iterated LPV-MPC cycle from the lifted state z0 under the given schedule.
MpcStep lpv_mpc_step_lifted(const LpvModel& model, const MpcProblem& problem, const MpcReference& reference,
                            const Vector& z0, const Eigen::Ref<const Matrix>& schedule,
                            const QpSettings& settings = {}, const std::optional<Vector>& warm_start = std::nullopt);

/// Same, lifting the measured state with z(x, 0).
MpcStep lpv_mpc_step(const LpvModel& model, const MpcProblem& problem, const MpcReference& reference,
                     const Vector& x_measured, const Eigen::Ref<const Matrix>& schedule,
                     const QpSettings& settings = {}, const std::optional<Vector>& warm_start = std::nullopt);

struct ControlDecision {
    Vector u;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    bool fallback = false;
};

class Controller {
public:
    virtual ~Controller() = default;
    virtual void reset(const Vector& x0) = 0;
    virtual ControlDecision decide(const Vector& x, Index step) = 0;
    virtual Index input_dim() const = 0;
};

/// Receding-horizon LPV-MPC with the schedule carried between steps.
class LpvMpcController final : public Controller {
public:
    LpvMpcController(LpvModel model, MpcProblem problem, ReferenceFn reference, QpSettings settings = {});

    void reset(const Vector& x0) override;
    ControlDecision decide(const Vector& x, Index step) override;
    Index input_dim() const override { return model_.input_dim(); }

    const Matrix& schedule() const noexcept { return schedule_; }
    const LpvModel& model() const noexcept { return model_; }
    const MpcProblem& problem() const noexcept { return problem_; }
    const MpcStep& last_step() const noexcept { return last_; }

private:
    LpvModel model_;
    MpcProblem problem_;
    ReferenceFn reference_;
    QpSettings settings_;
    Matrix schedule_;
    Vector previous_u_;
    std::optional<Vector> warm_;
    MpcStep last_;
};

/// Discrete linearization x+ - x_eq = Phi (x - x_eq) + Gamma (u - u_eq).
struct Linearization {
    Vector x_eq;
    Vector u_eq;
    Matrix Ac;  // continuous Jacobians
    Matrix Bc;
    Matrix Phi;
    Matrix Gamma;

    /// Rank of the controllability matrix [Gamma, Phi Gamma, ...].
    Index controllability_rank(double rtol = 1e-9) const;
};

/// Central finite-difference Jacobians of f + g u at (x_eq, u_eq).
void finite_difference_jacobians(const ControlAffineOde& ode, const Vector& x, const Vector& u, Matrix& Ac,
                                 Matrix& Bc, double step = 1e-6);

/// Jacobian linearization discretized with the RK4 scheme the plant uses.
/// Throws InputError when (x_eq, u_eq) is not an equilibrium and NumericalError
/// when the discretization is not finite.
Linearization linearize(const ControlAffineOde& ode, const Vector& x_eq, const Vector& u_eq, const SimConfig& cfg);

/// Linear MPC on a fixed linearization.
class LmpcController final : public Controller {
public:
    LmpcController(Linearization lin, MpcProblem problem, ReferenceFn reference, QpSettings settings = {});

    void reset(const Vector& x0) override;
    ControlDecision decide(const Vector& x, Index step) override;
    Index input_dim() const override { return lin_.Gamma.cols(); }

    const Linearization& linearization() const noexcept { return lin_; }
    bool controllable() const { return lin_.controllability_rank() == lin_.Phi.rows(); }

private:
    Linearization lin_;
    LpvModel model_;
    MpcProblem problem_;
    ReferenceFn reference_;
    QpSettings settings_;
    Vector previous_u_;
    std::optional<Vector> warm_;
};

/// LMPC around an equilibrium of the plant.
LmpcController lmpc_baseline(const ControlAffineOde& ode, const Vector& x_eq, const Vector& u_eq,
                             const MpcProblem& problem, ReferenceFn reference, const SimConfig& cfg,
                             QpSettings settings = {});

/// One row per control step; `final_state` is the state after the last step.
struct ClosedLoopLog {
    std::vector<double> times;
    Matrix states;   // K x n_x, state at each control instant
    Matrix inputs;   // K x n_u
    std::vector<double> objective;
    std::vector<int> iterations;
    std::vector<bool> converged;
    Vector final_state;
    double final_time = 0.0;
    bool failed = false;
    std::string failure;

    Index steps() const noexcept { return static_cast<Index>(times.size()); }
};

using PlantStep = std::function<Vector(const Vector& x, const Vector& u)>;

/// Receding-horizon loop over `steps` samples. Two consecutive solver
/// failures or a plant error terminate the loop with `failed` set.
ClosedLoopLog closed_loop(Controller& controller, const PlantStep& plant, const Vector& x0, Index steps,
                          double sample_time);

/// Plant given by the ODE, simulated with RK4 under zero-order hold.
ClosedLoopLog closed_loop(Controller& controller, const ControlAffineOde& ode, const Vector& x0, double duration,
                          const SimConfig& cfg);

/// CSV text: time, x_*, u_*, objective, iterations, converged.
std::string format_closed_loop_csv(const ClosedLoopLog& log);

/// True when the loop did not fail and |x_final|_inf <= tolerance.
bool stabilized(const ClosedLoopLog& log, double tolerance);

}  // namespace ckor
