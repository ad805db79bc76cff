#pragma once

#include <vector>

#include "ckor/data.hpp"
#include "ckor/model_io.hpp"

namespace ckor {

/// Multi-step predictions for one trajectory of a test set.
///
/// A trajectory of length L is cut into consecutive windows of `horizon`
/// steps (one window of length L when L < horizon); each window is rolled
/// out from its first state with its recorded inputs. Horizon 1 therefore
/// reproduces one-step evaluation on every sample.
struct TrajectoryPrediction {
    std::vector<Index> steps;  // 1-based sample index within the trajectory of each prediction
    Matrix y_true;
    Matrix y_pred;
    double rmse = 0.0;
    double nrmse = 0.0;  // NaN for a constant reference
    bool diverged = false;
};

struct EvaluationResult {
    std::vector<TrajectoryPrediction> trajectories;
    double mean_rmse = 0.0;  // +inf when any trajectory diverged
    double std_rmse = 0.0;   // population standard deviation over trajectories
    bool diverged = false;
};

EvaluationResult evaluate(const AnyModel& model, const SnapshotDataset& test, Index horizon);

/// Observable dimension and coordinate map of any model.
const Observable& observable_of(const AnyModel& model);
Index state_dim_of(const AnyModel& model);
Index input_dim_of(const AnyModel& model);

}  // namespace ckor
