#include "ckor/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SVD>

#include "ckor/error.hpp"
#include "ckor/predictor.hpp"

namespace ckor {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool symmetric(const Matrix& M)
{
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    return (M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale;
}

double min_eigenvalue(const Matrix& M)
{
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

void check_bounds(const Vector& lo, const Vector& hi, Index dim, const char* what)
{
    if (lo.size() != dim || hi.size() != dim) {
        throw InputError(std::string("MpcProblem: ") + what + " bounds must have length " + std::to_string(dim));
    }
    if ((lo.array() > hi.array()).any()) throw InputError(std::string("MpcProblem: ") + what + " min exceeds max");
}

Vector clamp(const Vector& v, const Vector& lo, const Vector& hi) { return v.cwiseMax(lo).cwiseMin(hi); }

Vector tile(const Vector& v, Index times)
{
    Vector out(v.size() * times);
    for (Index k = 0; k < times; ++k) out.segment(k * v.size(), v.size()) = v;
    return out;
}

Matrix shift_rows(const Matrix& M)
{
    Matrix out(M.rows(), M.cols());
    if (M.rows() == 0) return out;
    out.topRows(M.rows() - 1) = M.bottomRows(M.rows() - 1);
    out.row(M.rows() - 1) = M.row(M.rows() - 1);
    return out;
}

Vector shifted_warm_start(const Matrix& inputs)
{
    const Matrix shifted = shift_rows(inputs);
    Vector w(shifted.size());
    for (Index j = 0; j < shifted.rows(); ++j) w.segment(j * shifted.cols(), shifted.cols()) = shifted.row(j).transpose();
    return w;
}

void check_reference(const MpcReference& ref, const MpcProblem& problem)
{
    if (ref.x_ref.rows() != problem.horizon || ref.x_ref.cols() != problem.state_dim() ||
        ref.u_ref.rows() != problem.horizon || ref.u_ref.cols() != problem.input_dim()) {
        throw InputError("MPC reference must be " + std::to_string(problem.horizon) + " rows of state and input targets");
    }
}

}  // namespace

void MpcProblem::validate() const
{
    const Index nx = Q.rows();
    const Index nu = R.rows();
    if (horizon < 1) throw InputError("MpcProblem: horizon must be >= 1");
    if (nx < 1 || Q.cols() != nx || Q_terminal.rows() != nx || Q_terminal.cols() != nx) {
        throw InputError("MpcProblem: Q and Q_terminal must be square of the same size");
    }
    if (nu < 1 || R.cols() != nu) throw InputError("MpcProblem: R must be square");
    if (!symmetric(Q) || !symmetric(Q_terminal) || !symmetric(R)) throw InputError("MpcProblem: weights must be symmetric");
    const double psd_tol = -1e-12;
    if (min_eigenvalue(Q) < psd_tol * std::max(1.0, Q.norm()) ||
        min_eigenvalue(Q_terminal) < psd_tol * std::max(1.0, Q_terminal.norm())) {
        throw InputError("MpcProblem: Q and Q_terminal must be positive semidefinite");
    }
    if (!(min_eigenvalue(R) > 0.0)) throw InputError("MpcProblem: R must be positive definite");
    check_bounds(x_min, x_max, nx, "state");
    check_bounds(u_min, u_max, nu, "input");
}

MpcProblem MpcProblem::unbounded(Matrix Q, Matrix R, Matrix Q_terminal, Index horizon)
{
    const Index nx = Q.rows();
    const Index nu = R.rows();
    MpcProblem p{std::move(Q), std::move(R), std::move(Q_terminal), horizon, Vector::Constant(nx, -kInf),
                 Vector::Constant(nx, kInf), Vector::Constant(nu, -kInf), Vector::Constant(nu, kInf)};
    return p;
}

MpcReference MpcReference::constant(const Vector& x_bar, const Vector& u_bar, Index horizon)
{
    MpcReference r{Matrix(horizon, x_bar.size()), Matrix(horizon, u_bar.size())};
    r.x_ref.rowwise() = x_bar.transpose();
    r.u_ref.rowwise() = u_bar.transpose();
    return r;
}

ReferenceFn constant_reference(Vector x_bar, Vector u_bar)
{
    return [x_bar = std::move(x_bar), u_bar = std::move(u_bar)](Index, Index horizon) {
        return MpcReference::constant(x_bar, u_bar, horizon);
    };
}

ReferenceFn piecewise_reference(std::vector<std::pair<Index, Vector>> segments, Index input_dim)
{
    if (segments.empty()) throw InputError("piecewise_reference: at least one segment is required");
    const Index nx = segments.front().second.size();
    for (const auto& [steps, x_bar] : segments) {
        if (steps < 0 || x_bar.size() != nx) throw InputError("piecewise_reference: inconsistent segment");
    }
    auto target_at = [segments](Index k) -> const Vector& {
        Index start = 0;
        for (const auto& [steps, x_bar] : segments) {
            if (k < start + steps) return x_bar;
            start += steps;
        }
        return segments.back().second;
    };
    return [target_at, nx, input_dim](Index step, Index horizon) {
        MpcReference r{Matrix(horizon, nx), Matrix::Zero(horizon, input_dim)};
        for (Index i = 1; i <= horizon; ++i) r.x_ref.row(i - 1) = target_at(step + i).transpose();
        return r;
    };
}

Matrix LpvModel::input_matrix(const Vector& p) const
{
    Matrix B = B0;
    for (std::size_t i = 0; i < channels.size(); ++i) B.col(static_cast<Index>(i)) += channels[i] * p;
    return B;
}

Vector LpvModel::step(const Vector& z, const Vector& u) const { return A * z + input_matrix(z) * u; }

void LpvModel::validate() const
{
    const Index N = A.rows();
    if (N < 1 || A.cols() != N) throw InputError("LpvModel: A must be square");
    if (B0.rows() != N) throw InputError("LpvModel: B0 must have one row per lifted coordinate");
    if (!channels.empty() && static_cast<Index>(channels.size()) != B0.cols()) {
        throw InputError("LpvModel: one bilinear channel per input is required");
    }
    for (const Matrix& Bi : channels) {
        if (Bi.rows() != N || Bi.cols() != N) throw InputError("LpvModel: bilinear channels must be N x N");
    }
    if (C.cols() != N || y_offset.size() != C.rows()) throw InputError("LpvModel: readout has wrong shape");
    if (!lift) throw InputError("LpvModel: lifting is not set");
}

LpvModel LpvModel::from(const CkorModel& model)
{
    LpvModel m;
    m.A = model.A;
    m.B0 = Matrix::Zero(model.lifted_dim(), model.input_dim());
    m.channels = control_channels(model);
    m.C = model.C;
    m.y_offset = Vector::Zero(model.output_dim());
    m.lift = [lifting = model.lifting](const Vector& x, const Vector& u) { return lifting(x, u); };
    return m;
}

LpvModel LpvModel::from(const ReducedModel& model)
{
    LpvModel m;
    m.A = model.A;
    m.B0 = Matrix::Zero(model.lifted_dim(), model.input_dim());
    m.channels = model.B;
    m.C = model.C;
    m.y_offset = Vector::Zero(model.output_dim());
    m.lift = [model](const Vector& x, const Vector& u) { return model.lift(x, u); };
    return m;
}

LpvModel LpvModel::linear(Matrix A, Matrix B, Vector x_eq)
{
    const Index n = A.rows();
    LpvModel m;
    m.A = std::move(A);
    m.B0 = std::move(B);
    m.C = Matrix::Identity(n, n);
    m.y_offset = x_eq;
    m.lift = [x_eq](const Vector& x, const Vector&) -> Vector { return x - x_eq; };
    return m;
}

QuadraticProgram build_qp(const LpvModel& model, const MpcProblem& problem, const MpcReference& reference,
                          const Vector& z0, const Eigen::Ref<const Matrix>& schedule)
{
    problem.validate();
    model.validate();
    check_reference(reference, problem);
    const Index T = problem.horizon;
    const Index ny = problem.state_dim();
    const Index nu = problem.input_dim();
    const Index N = model.lifted_dim();
    if (model.output_dim() != ny) {
        throw InputError("build_qp: model output dimension " + std::to_string(model.output_dim()) +
                         " does not match the weight size " + std::to_string(ny));
    }
    if (model.input_dim() != nu) throw InputError("build_qp: model input dimension does not match R");
    if (z0.size() != N) throw InputError("build_qp: initial lifted state has wrong length");
    if (schedule.rows() != T || schedule.cols() != N) {
        throw InputError("build_qp: schedule must be " + std::to_string(T) + " x " + std::to_string(N));
    }

    // M[k] = C A^k
    std::vector<Matrix> M(static_cast<std::size_t>(T + 1));
    M[0] = model.C;
    for (Index k = 1; k <= T; ++k) M[static_cast<std::size_t>(k)] = M[static_cast<std::size_t>(k - 1)] * model.A;

    std::vector<Matrix> Bseq(static_cast<std::size_t>(T));
    for (Index j = 0; j < T; ++j) Bseq[static_cast<std::size_t>(j)] = model.input_matrix(schedule.row(j).transpose());

    // Prediction y = free + S U with U = [u_0; ...; u_{T-1}].
    Vector free(T * ny);
    Matrix S = Matrix::Zero(T * ny, T * nu);
    for (Index i = 1; i <= T; ++i) {
        free.segment((i - 1) * ny, ny) = M[static_cast<std::size_t>(i)] * z0 + model.y_offset;
        for (Index j = 0; j < i; ++j) {
            S.block((i - 1) * ny, j * nu, ny, nu) = M[static_cast<std::size_t>(i - 1 - j)] * Bseq[static_cast<std::size_t>(j)];
        }
    }

    const Matrix Q_last = problem.Q + problem.Q_terminal;
    Vector err(T * ny);
    Vector u_bar(T * nu);
    for (Index i = 0; i < T; ++i) {
        err.segment(i * ny, ny) = free.segment(i * ny, ny) - reference.x_ref.row(i).transpose();
        u_bar.segment(i * nu, nu) = reference.u_ref.row(i).transpose();
    }
    Matrix QS(T * ny, T * nu);
    Vector Qe(T * ny);
    for (Index i = 0; i < T; ++i) {
        const Matrix& Qi = i + 1 == T ? Q_last : problem.Q;
        QS.middleRows(i * ny, ny) = Qi * S.middleRows(i * ny, ny);
        Qe.segment(i * ny, ny) = Qi * err.segment(i * ny, ny);
    }
    Vector Ru(T * nu);
    for (Index j = 0; j < T; ++j) Ru.segment(j * nu, nu) = problem.R * u_bar.segment(j * nu, nu);

    QuadraticProgram qp;
    qp.P.noalias() = 2.0 * S.transpose() * QS;
    for (Index j = 0; j < T; ++j) qp.P.block(j * nu, j * nu, nu, nu) += 2.0 * problem.R;
    qp.P = 0.5 * (qp.P + qp.P.transpose()).eval();
    qp.q = 2.0 * (S.transpose() * Qe - Ru);
    qp.constant = err.dot(Qe) + u_bar.dot(Ru);
    qp.lower = tile(problem.u_min, T);
    qp.upper = tile(problem.u_max, T);

    std::vector<Index> rows;
    for (Index i = 0; i < T; ++i) {
        for (Index d = 0; d < ny; ++d) {
            if (std::isfinite(problem.x_min[d]) || std::isfinite(problem.x_max[d])) rows.push_back(i * ny + d);
        }
    }
    const auto g = static_cast<Index>(rows.size());
    qp.G.resize(g, T * nu);
    qp.g_lower.resize(g);
    qp.g_upper.resize(g);
    for (Index r = 0; r < g; ++r) {
        const Index row = rows[static_cast<std::size_t>(r)];
        const Index d = row % ny;
        qp.G.row(r) = S.row(row);
        qp.g_lower[r] = problem.x_min[d] - free[row];
        qp.g_upper[r] = problem.x_max[d] - free[row];
    }
    return qp;
}

Matrix simulate_lifted(const LpvModel& model, const Vector& z0, const Eigen::Ref<const Matrix>& inputs)
{
    if (inputs.cols() != model.input_dim()) throw InputError("simulate_lifted: input dimension mismatch");
    Matrix Z(inputs.rows() + 1, z0.size());
    Z.row(0) = z0.transpose();
    Vector z = z0;
    for (Index k = 0; k < inputs.rows(); ++k) {
        z = model.step(z, inputs.row(k).transpose());
        Z.row(k + 1) = z.transpose();
    }
    return Z;
}

MpcStep lpv_mpc_step_lifted(const LpvModel& model, const MpcProblem& problem, const MpcReference& reference,
                            const Vector& z0, const Eigen::Ref<const Matrix>& schedule, const QpSettings& settings,
                            const std::optional<Vector>& warm_start)
{
    const QuadraticProgram qp = build_qp(model, problem, reference, z0, schedule);
    MpcStep step;
    step.qp = solve_qp(qp, settings, warm_start);
    const Index T = problem.horizon;
    const Index nu = problem.input_dim();
    step.inputs.resize(T, nu);
    for (Index j = 0; j < T; ++j) {
        step.inputs.row(j) = clamp(step.qp.x.segment(j * nu, nu), problem.u_min, problem.u_max).transpose();
    }
    step.u_applied = step.inputs.row(0).transpose();
    step.lifted = simulate_lifted(model, z0, step.inputs);
    step.schedule = step.lifted.topRows(T);
    return step;
}

MpcStep lpv_mpc_step(const LpvModel& model, const MpcProblem& problem, const MpcReference& reference,
                     const Vector& x_measured, const Eigen::Ref<const Matrix>& schedule, const QpSettings& settings,
                     const std::optional<Vector>& warm_start)
{
    const Vector z0 = model.lift(x_measured, Vector::Zero(model.input_dim()));
    return lpv_mpc_step_lifted(model, problem, reference, z0, schedule, settings, warm_start);
}

LpvMpcController::LpvMpcController(LpvModel model, MpcProblem problem, ReferenceFn reference, QpSettings settings)
    : model_(std::move(model)), problem_(std::move(problem)), reference_(std::move(reference)), settings_(settings)
{
    model_.validate();
    problem_.validate();
    if (model_.output_dim() != problem_.state_dim() || model_.input_dim() != problem_.input_dim()) {
        throw InputError("LpvMpcController: model and problem dimensions disagree");
    }
    if (!reference_) throw InputError("LpvMpcController: reference is not set");
}

void LpvMpcController::reset(const Vector& x0)
{
    const Vector z0 = model_.lift(x0, Vector::Zero(model_.input_dim()));
    schedule_.resize(problem_.horizon, z0.size());
    schedule_.rowwise() = z0.transpose();
    previous_u_ = clamp(Vector::Zero(model_.input_dim()), problem_.u_min, problem_.u_max);
    warm_.reset();
}

ControlDecision LpvMpcController::decide(const Vector& x, Index step)
{
    if (schedule_.rows() != problem_.horizon) reset(x);
    const Vector z0 = model_.lift(x, Vector::Zero(model_.input_dim()));
    schedule_.row(0) = z0.transpose();
    last_ = lpv_mpc_step_lifted(model_, problem_, reference_(step, problem_.horizon), z0, schedule_, settings_, warm_);

    ControlDecision d;
    d.objective = last_.qp.objective;
    d.iterations = last_.qp.iterations;
    d.converged = last_.qp.converged && last_.u_applied.allFinite();
    if (d.converged) {
        d.u = last_.u_applied;
        schedule_ = shift_rows(last_.schedule);
        warm_ = shifted_warm_start(last_.inputs);
        previous_u_ = d.u;
    } else {
        d.u = previous_u_;
        d.fallback = true;
        schedule_ = shift_rows(schedule_);
        warm_.reset();
    }
    return d;
}

Index Linearization::controllability_rank(double rtol) const
{
    const Index n = Phi.rows();
    const Index m = Gamma.cols();
    Matrix ctrb(n, n * m);
    Matrix block = Gamma;
    for (Index k = 0; k < n; ++k) {
        ctrb.middleCols(k * m, m) = block;
        block = Phi * block;
    }
    const Eigen::JacobiSVD<Matrix> svd(ctrb);
    const Vector& s = svd.singularValues();
    const double scale = std::max(1.0, Phi.cwiseAbs().maxCoeff());
    Index rank = 0;
    for (Index i = 0; i < s.size(); ++i) {
        if (s[i] > rtol * scale) ++rank;
    }
    return rank;
}

void finite_difference_jacobians(const ControlAffineOde& ode, const Vector& x, const Vector& u, Matrix& Ac,
                                 Matrix& Bc, double step)
{
    const Index n = x.size();
    const Index m = u.size();
    Ac.resize(n, n);
    Bc.resize(n, m);
    for (Index k = 0; k < n; ++k) {
        const double h = step * std::max(1.0, std::abs(x[k]));
        Vector xp = x;
        Vector xm = x;
        xp[k] += h;
        xm[k] -= h;
        Ac.col(k) = (ode(xp, u) - ode(xm, u)) / (2.0 * h);
    }
    for (Index k = 0; k < m; ++k) {
        const double h = step * std::max(1.0, std::abs(u[k]));
        Vector up = u;
        Vector um = u;
        up[k] += h;
        um[k] -= h;
        Bc.col(k) = (ode(x, up) - ode(x, um)) / (2.0 * h);
    }
}

Linearization linearize(const ControlAffineOde& ode, const Vector& x_eq, const Vector& u_eq, const SimConfig& cfg)
{
    cfg.validate();
    if (x_eq.size() != ode.state_dim || u_eq.size() != ode.input_dim) {
        throw InputError("linearize: operating point has wrong dimensions for " + ode.name);
    }
    const Vector rate = ode(x_eq, u_eq);
    if (rate.cwiseAbs().maxCoeff() > 1e-8 * (1.0 + x_eq.cwiseAbs().maxCoeff())) {
        throw InputError("linearize: operating point is not an equilibrium of " + ode.name);
    }
    Linearization lin{x_eq, u_eq, {}, {}, {}, {}};
    finite_difference_jacobians(ode, x_eq, u_eq, lin.Ac, lin.Bc);

    // RK4 applied to the linear system with the input held constant.
    const Index n = x_eq.size();
    const double h = cfg.sample_time / cfg.substeps;
    const Matrix I = Matrix::Identity(n, n);
    const Matrix hA = h * lin.Ac;
    const Matrix hA2 = hA * hA;
    const Matrix hA3 = hA2 * hA;
    const Matrix phi = I + hA + hA2 / 2.0 + hA3 / 6.0 + hA3 * hA / 24.0;
    const Matrix gamma = h * (I + hA / 2.0 + hA2 / 6.0 + hA3 / 24.0) * lin.Bc;
    lin.Phi = I;
    lin.Gamma = Matrix::Zero(n, u_eq.size());
    for (int s = 0; s < cfg.substeps; ++s) {
        lin.Gamma = phi * lin.Gamma + gamma;
        lin.Phi = phi * lin.Phi;
    }
    if (!lin.Phi.allFinite() || !lin.Gamma.allFinite()) throw NumericalError("linearize: discretization is not finite");
    return lin;
}

LmpcController::LmpcController(Linearization lin, MpcProblem problem, ReferenceFn reference, QpSettings settings)
    : lin_(std::move(lin)), problem_(std::move(problem)), reference_(std::move(reference)), settings_(settings)
{
    problem_.validate();
    if (lin_.Phi.rows() != problem_.state_dim() || lin_.Gamma.cols() != problem_.input_dim()) {
        throw InputError("LmpcController: linearization and problem dimensions disagree");
    }
    if (!reference_) throw InputError("LmpcController: reference is not set");
    model_ = LpvModel::linear(lin_.Phi, lin_.Gamma, lin_.x_eq);
    // Decision variables are deviations from u_eq.
    problem_.u_min -= lin_.u_eq;
    problem_.u_max -= lin_.u_eq;
}

void LmpcController::reset(const Vector&)
{
    previous_u_ = clamp(Vector::Zero(lin_.u_eq.size()), problem_.u_min, problem_.u_max);
    warm_.reset();
}

ControlDecision LmpcController::decide(const Vector& x, Index step)
{
    if (previous_u_.size() != lin_.u_eq.size()) reset(x);
    MpcReference ref = reference_(step, problem_.horizon);
    ref.u_ref.rowwise() -= lin_.u_eq.transpose();
    const Matrix schedule = Matrix::Zero(problem_.horizon, model_.lifted_dim());
    const MpcStep s = lpv_mpc_step(model_, problem_, ref, x, schedule, settings_, warm_);

    ControlDecision d;
    d.objective = s.qp.objective;
    d.iterations = s.qp.iterations;
    d.converged = s.qp.converged && s.u_applied.allFinite();
    if (d.converged) {
        previous_u_ = s.u_applied;
        warm_ = shifted_warm_start(s.inputs);
    } else {
        d.fallback = true;
        warm_.reset();
    }
    d.u = previous_u_ + lin_.u_eq;
    return d;
}

LmpcController lmpc_baseline(const ControlAffineOde& ode, const Vector& x_eq, const Vector& u_eq,
                             const MpcProblem& problem, ReferenceFn reference, const SimConfig& cfg,
                             QpSettings settings)
{
    return LmpcController(linearize(ode, x_eq, u_eq, cfg), problem, std::move(reference), settings);
}

ClosedLoopLog closed_loop(Controller& controller, const PlantStep& plant, const Vector& x0, Index steps,
                          double sample_time)
{
    if (steps < 0) throw InputError("closed_loop: number of steps must be non-negative");
    if (!(sample_time > 0.0)) throw InputError("closed_loop: sample time must be positive");
    ClosedLoopLog log;
    std::vector<Vector> states;
    std::vector<Vector> inputs;
    Vector x = x0;
    log.final_state = x0;
    controller.reset(x0);
    int consecutive_failures = 0;
    for (Index k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * sample_time;
        ControlDecision d;
        try {
            d = controller.decide(x, k);
        } catch (const Error& e) {
            log.failed = true;
            log.failure = "controller error at step " + std::to_string(k) + ": " + e.what();
            break;
        }
        log.times.push_back(t);
        states.push_back(x);
        inputs.push_back(d.u);
        log.objective.push_back(d.objective);
        log.iterations.push_back(d.iterations);
        log.converged.push_back(d.converged);
        consecutive_failures = d.converged ? 0 : consecutive_failures + 1;
        if (consecutive_failures >= 2) {
            log.failed = true;
            log.failure = "QP failed on two consecutive steps ending at step " + std::to_string(k);
            break;
        }
        try {
            x = plant(x, d.u);
        } catch (const Error& e) {
            log.failed = true;
            log.failure = "plant error at step " + std::to_string(k) + ": " + e.what();
            break;
        }
        if (!x.allFinite()) {
            log.failed = true;
            log.failure = "plant state became non-finite at step " + std::to_string(k);
            break;
        }
        log.final_state = x;
        log.final_time = t + sample_time;
    }
    const Index K = log.steps();
    log.states.resize(K, x0.size());
    log.inputs.resize(K, controller.input_dim());
    for (Index k = 0; k < K; ++k) {
        log.states.row(k) = states[static_cast<std::size_t>(k)].transpose();
        log.inputs.row(k) = inputs[static_cast<std::size_t>(k)].transpose();
    }
    return log;
}

ClosedLoopLog closed_loop(Controller& controller, const ControlAffineOde& ode, const Vector& x0, double duration,
                          const SimConfig& cfg)
{
    cfg.validate();
    if (!(duration >= 0.0)) throw InputError("closed_loop: duration must be non-negative");
    if (x0.size() != ode.state_dim || controller.input_dim() != ode.input_dim) {
        throw InputError("closed_loop: plant and controller dimensions disagree");
    }
    const auto steps = static_cast<Index>(std::llround(duration / cfg.sample_time));
    const PlantStep plant = [&ode, &cfg](const Vector& x, const Vector& u) -> Vector {
        const Matrix U = u.transpose();
        return simulate(ode, x, U, cfg).row(1).transpose();
    };
    return closed_loop(controller, plant, x0, steps, cfg.sample_time);
}

std::string format_closed_loop_csv(const ClosedLoopLog& log)
{
    std::string out = "time";
    for (Index k = 1; k <= log.states.cols(); ++k) out += ",x_" + std::to_string(k);
    for (Index k = 1; k <= log.inputs.cols(); ++k) out += ",u_" + std::to_string(k);
    out += ",objective,iterations,converged\n";
    for (Index k = 0; k < log.steps(); ++k) {
        const auto i = static_cast<std::size_t>(k);
        out += format_double(log.times[i]);
        for (Index c = 0; c < log.states.cols(); ++c) out += "," + format_double(log.states(k, c));
        for (Index c = 0; c < log.inputs.cols(); ++c) out += "," + format_double(log.inputs(k, c));
        out += "," + format_double(log.objective[i]) + "," + std::to_string(log.iterations[i]) + "," +
               (log.converged[i] ? "1" : "0") + "\n";
    }
    return out;
}

bool stabilized(const ClosedLoopLog& log, double tolerance)
{
    return !log.failed && log.final_state.size() > 0 && log.final_state.cwiseAbs().maxCoeff() <= tolerance;
}

}  // namespace ckor
