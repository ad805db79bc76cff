#include "ckor/predictor.hpp"

#include <string>

#include "ckor/error.hpp"

namespace ckor {

namespace {

void check_inputs(Index state_dim, Index input_dim, const Vector& x0, const Eigen::Ref<const Matrix>& inputs)
{
    if (inputs.rows() < 1) throw InputError("rollout: horizon must be at least 1");
    if (x0.size() != state_dim) throw InputError("rollout: initial state has wrong dimension");
    if (inputs.cols() != input_dim) {
        throw InputError("rollout: inputs have " + std::to_string(inputs.cols()) + " columns, model expects " +
                         std::to_string(input_dim));
    }
}

void guard(const Vector& z, std::size_t step)
{
    if (!z.allFinite() || z.cwiseAbs().maxCoeff() > kLiftedDivergenceThreshold) {
        throw PredictionError("lifted state diverged", step);
    }
}

}  // namespace

Rollout rollout(const CkorModel& model, const Vector& x0, const Eigen::Ref<const Matrix>& inputs)
{
    check_inputs(model.state_dim(), model.input_dim(), x0, inputs);
    const Index H = inputs.rows();
    Rollout out{Matrix(H, model.lifted_dim()), Matrix(H, model.output_dim())};
    Vector z = model.lifting(x0, inputs.row(0).transpose());
    guard(z, 1);
    for (Index k = 1;; ++k) {
        out.lifted.row(k - 1) = z.transpose();
        out.outputs.row(k - 1) = (model.C * z).transpose();
        if (k == H) break;
        Vector next = model.A * z;
        next.array() *= 1.0 + model.lifting.control_vector(inputs.row(k).transpose()).array();
        z = std::move(next);
        guard(z, static_cast<std::size_t>(k + 1));
    }
    return out;
}

Rollout rollout(const ReducedModel& model, const Vector& x0, const Eigen::Ref<const Matrix>& inputs)
{
    check_inputs(model.state_dim(), model.input_dim(), x0, inputs);
    const Index H = inputs.rows();
    Rollout out{Matrix(H, model.lifted_dim()), Matrix(H, model.output_dim())};
    Vector z = model.lift(x0, inputs.row(0).transpose());
    guard(z, 1);
    for (Index k = 1;; ++k) {
        out.lifted.row(k - 1) = z.transpose();
        out.outputs.row(k - 1) = (model.C * z).transpose();
        if (k == H) break;
        Vector next = model.A * z;
        for (std::size_t i = 0; i < model.B.size(); ++i) next.noalias() += inputs(k, static_cast<Index>(i)) * (model.B[i] * z);
        z = std::move(next);
        guard(z, static_cast<std::size_t>(k + 1));
    }
    return out;
}

Rollout rollout(const BedmdcModel& model, const Vector& x0, const Eigen::Ref<const Matrix>& inputs)
{
    check_inputs(model.state_dim(), model.input_dim, x0, inputs);
    const Index H = inputs.rows();
    Rollout out{Matrix(H, model.lifted_dim()), Matrix(H, model.output_dim())};
    Vector psi = model.lift(x0);
    for (Index k = 0; k < H; ++k) {
        Vector next = model.block(0) * psi;
        for (Index i = 0; i < model.input_dim; ++i) next.noalias() += inputs(k, i) * (model.block(i + 1) * psi);
        psi = std::move(next);
        guard(psi, static_cast<std::size_t>(k + 1));
        out.lifted.row(k) = psi.transpose();
        out.outputs.row(k) = (model.C * psi).transpose();
    }
    return out;
}

Matrix predict_one_step(const CkorModel& model, const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Matrix>& U)
{
    return model.lifting.batch(X, U) * model.C.transpose();
}

Matrix predict_one_step(const ReducedModel& model, const Eigen::Ref<const Matrix>& X,
                        const Eigen::Ref<const Matrix>& U)
{
    return model.lifting.batch(X, U) * model.V * model.C.transpose();
}

Matrix predict_one_step(const BedmdcModel& model, const Eigen::Ref<const Matrix>& X,
                        const Eigen::Ref<const Matrix>& U)
{
    if (U.rows() != X.rows() || U.cols() != model.input_dim) throw InputError("predict_one_step: input shape mismatch");
    const Matrix Psi = gram(model.state_kernel, X, model.centers);
    Matrix next = Psi * model.block(0).transpose();
    for (Index i = 0; i < model.input_dim; ++i) {
        next.noalias() += U.col(i).asDiagonal() * (Psi * model.block(i + 1).transpose());
    }
    return next * model.C.transpose();
}

namespace {

LpvSequence lpv_from_channels(const Matrix& A, const std::vector<Matrix>& channels,
                              const Eigen::Ref<const Matrix>& schedule)
{
    if (schedule.cols() != A.rows()) {
        throw InputError("lpv_matrices: schedule entries have length " + std::to_string(schedule.cols()) +
                         ", model lifted dimension is " + std::to_string(A.rows()));
    }
    LpvSequence seq{A, {}};
    seq.B.reserve(static_cast<std::size_t>(schedule.rows()));
    const auto nu = static_cast<Index>(channels.size());
    for (Index k = 0; k < schedule.rows(); ++k) {
        Matrix Bk(A.rows(), nu);
        for (Index i = 0; i < nu; ++i) Bk.col(i) = channels[static_cast<std::size_t>(i)] * schedule.row(k).transpose();
        seq.B.push_back(std::move(Bk));
    }
    return seq;
}

}  // namespace

LpvSequence lpv_matrices(const CkorModel& model, const Eigen::Ref<const Matrix>& schedule)
{
    return lpv_from_channels(model.A, control_channels(model), schedule);
}

LpvSequence lpv_matrices(const ReducedModel& model, const Eigen::Ref<const Matrix>& schedule)
{
    return lpv_from_channels(model.A, model.B, schedule);
}

Matrix readout_for(const CkorModel& model, const Eigen::Ref<const Matrix>& observable_at_anchors)
{
    if (observable_at_anchors.rows() != model.lifted_dim()) {
        throw InputError("predict_observable: expected " + std::to_string(model.lifted_dim()) +
                         " anchor rows, got " + std::to_string(observable_at_anchors.rows()));
    }
    return model.regression.apply(observable_at_anchors).transpose();
}

Matrix predict_observable(const CkorModel& model, const Vector& x0, const Eigen::Ref<const Matrix>& inputs,
                          const Eigen::Ref<const Matrix>& observable_at_anchors)
{
    const Matrix readout = readout_for(model, observable_at_anchors);
    const Rollout r = rollout(model, x0, inputs);
    return r.lifted * readout.transpose();
}

}  // namespace ckor
