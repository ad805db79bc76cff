#include "ckor/evaluation.hpp"

#include <cmath>
#include <limits>

#include "ckor/error.hpp"
#include "ckor/predictor.hpp"

namespace ckor {

namespace {

Matrix rollout_outputs(const AnyModel& model, const Vector& x0, const Eigen::Ref<const Matrix>& inputs)
{
    return std::visit([&](const auto& m) { return rollout(m, x0, inputs).outputs; }, model);
}

}  // namespace

const Observable& observable_of(const AnyModel& model)
{
    return std::visit([](const auto& m) -> const Observable& { return m.observable; }, model);
}

Index state_dim_of(const AnyModel& model)
{
    return std::visit([](const auto& m) { return m.state_dim(); }, model);
}

Index input_dim_of(const AnyModel& model)
{
    if (const auto* b = std::get_if<BedmdcModel>(&model)) return b->input_dim;
    if (const auto* c = std::get_if<CkorModel>(&model)) return c->input_dim();
    return std::get<ReducedModel>(model).input_dim();
}

EvaluationResult evaluate(const AnyModel& model, const SnapshotDataset& test, Index horizon)
{
    if (horizon < 1) throw InputError("evaluate: horizon must be >= 1");
    test.validate();
    if (test.state_dim() != state_dim_of(model) || test.input_dim() != input_dim_of(model)) {
        throw InputError("evaluate: dataset has " + std::to_string(test.state_dim()) + " states and " +
                         std::to_string(test.input_dim()) + " inputs, model expects " +
                         std::to_string(state_dim_of(model)) + " and " + std::to_string(input_dim_of(model)));
    }
    const Observable& obs = observable_of(model);
    std::vector<std::size_t> segments = test.segments;
    if (segments.empty()) segments.push_back(static_cast<std::size_t>(test.size()));

    EvaluationResult result;
    Index offset = 0;
    for (const std::size_t seg : segments) {
        const auto L = static_cast<Index>(seg);
        const Index window = std::min(horizon, L);
        const Index windows = L / window;
        TrajectoryPrediction tp;
        tp.y_true = obs.evaluate(test.X_plus.middleRows(offset, windows * window));
        tp.y_pred.resize(tp.y_true.rows(), tp.y_true.cols());
        for (Index w = 0; w < windows; ++w) {
            const Index start = offset + w * window;
            for (Index k = 0; k < window; ++k) tp.steps.push_back(w * window + k + 1);
            if (tp.diverged) continue;
            try {
                tp.y_pred.middleRows(w * window, window) =
                    rollout_outputs(model, test.X.row(start).transpose(), test.U.middleRows(start, window));
            } catch (const PredictionError&) {
                tp.diverged = true;
            }
        }
        if (tp.diverged) {
            tp.y_pred.setConstant(std::numeric_limits<double>::quiet_NaN());
            tp.rmse = std::numeric_limits<double>::infinity();
            tp.nrmse = std::numeric_limits<double>::infinity();
        } else {
            tp.rmse = rmse(tp.y_true, tp.y_pred);
            try {
                tp.nrmse = nrmse(tp.y_true, tp.y_pred);
            } catch (const InputError&) {
                tp.nrmse = std::numeric_limits<double>::quiet_NaN();
            }
        }
        result.diverged = result.diverged || tp.diverged;
        result.trajectories.push_back(std::move(tp));
        offset += L;
    }

    const auto count = static_cast<double>(result.trajectories.size());
    if (result.diverged) {
        result.mean_rmse = std::numeric_limits<double>::infinity();
        result.std_rmse = std::numeric_limits<double>::infinity();
    } else {
        double sum = 0.0;
        for (const auto& t : result.trajectories) sum += t.rmse;
        result.mean_rmse = sum / count;
        double var = 0.0;
        for (const auto& t : result.trajectories) var += (t.rmse - result.mean_rmse) * (t.rmse - result.mean_rmse);
        result.std_rmse = std::sqrt(var / count);
    }
    return result;
}

}  // namespace ckor
