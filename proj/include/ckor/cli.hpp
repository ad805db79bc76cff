#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ckor/config.hpp"
#include "ckor/data.hpp"
#include "ckor/evaluation.hpp"
#include "ckor/model_io.hpp"

namespace ckor {

enum ExitCode : int {
    kExitSuccess = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitNumerical = 3,
    kExitPartial = 4,
};

/// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e) noexcept;

/// Independent seed for a named purpose (dataset split, subsample, repetition).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Seed streams used by the commands.
enum class SeedStream : std::uint64_t {
    Train = 1,
    Validation = 2,
    Test = 3,
    Subsample = 4,
    Inducing = 5,
};

/// Loads a CSV source or generates the trajectories with the split's seed.
SnapshotDataset load_dataset(const ExperimentConfig& cfg, const DataSource& source, SeedStream split);

/// Fits the configured estimator. `seed` drives the optional training
/// subsample and the inducing/center selection.
AnyModel fit_model(const ModelConfig& model, const SnapshotDataset& train, std::uint64_t seed);

/// Writes train/validation/test CSVs for every generated split; returns the paths.
std::vector<std::filesystem::path> cmd_generate(const ExperimentConfig& cfg);

struct FitOutput {
    AnyModel model;
    double fit_seconds = 0.0;
    std::filesystem::path model_path;
    std::filesystem::path report_path;
};

/// Fits on the train split; writes model.json and fit_report.json.
FitOutput cmd_fit(const ExperimentConfig& cfg);

/// Structured description of a fitted model (dimensions, kernels, POD rank).
std::string describe_model(const AnyModel& model);

struct SweepCell {
    Estimator estimator = Estimator::Ckor;
    std::size_t train_size = 0;
    double bandwidth = 0.0;
    double gamma = 0.0;
    int repetitions = 0;
    double mean_rmse = 0.0;  // over all test trajectories of all repetitions; inf if any diverged
    double std_rmse = 0.0;
    double fit_seconds = 0.0;      // mean over repetitions
    double predict_seconds = 0.0;  // mean over repetitions
    bool diverged = false;
    std::string error;  // first failure message, if any
};

struct SweepOutput {
    std::vector<SweepCell> cells;
    std::filesystem::path csv_path;
    bool partial = false;
};

/// Full cross product of train sizes, estimators, bandwidths and gammas.
/// Cells run on up to `workers` threads; the output order is the grid order.
SweepOutput run_sweep(const ExperimentConfig& cfg, const SnapshotDataset& train, const SnapshotDataset& test,
                      unsigned workers);
SweepOutput cmd_sweep(const ExperimentConfig& cfg, unsigned workers);
std::string format_sweep_csv(const std::vector<SweepCell>& cells);

struct PredictOutput {
    EvaluationResult result;
    std::vector<std::filesystem::path> trajectory_files;
    std::filesystem::path summary_path;
};

/// Rolls the model out over `data` in windows of `horizon`; writes
/// predictions/trajectory_<i>.csv and prediction_summary.csv under `out_dir`.
PredictOutput cmd_predict(const AnyModel& model, const SnapshotDataset& data, Index horizon, double sample_time,
                          const std::filesystem::path& out_dir);
std::string format_prediction_csv(const TrajectoryPrediction& traj, double sample_time);
std::string format_prediction_summary(const EvaluationResult& result);

struct MpcRun {
    Vector x0;
    ClosedLoopLog log;
    Vector final_reference;
    double final_error = 0.0;  // |x_final - final reference|_inf
    bool stabilized = false;
    std::filesystem::path log_path;
};

struct MpcOutput {
    std::vector<MpcRun> runs;
    std::filesystem::path summary_path;
};

/// Builds the controller from cfg.mpc (fitting a model when no model file is
/// given) and runs one closed loop per initial state.
MpcOutput cmd_mpc(const ExperimentConfig& cfg);
std::string format_mpc_summary(const std::vector<MpcRun>& runs);

/// Argument parsing and dispatch; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ckor
