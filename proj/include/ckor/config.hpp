#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ckor/kernels.hpp"
#include "ckor/mpc.hpp"
#include "ckor/qp.hpp"
#include "ckor/systems.hpp"

namespace ckor {

/// One dataset: either a CSV file or a generation recipe.
struct DataSource {
    std::optional<std::filesystem::path> csv;
    std::optional<TrajectorySpec> generate;
};

struct DataConfig {
    std::optional<DataSource> train;
    std::optional<DataSource> validation;
    std::optional<DataSource> test;
};

enum class Estimator { Ckor, NyCkor, Bedmdc };

std::string_view to_string(Estimator e);
Estimator estimator_from_string(const std::string& name);

struct ModelConfig {
    Estimator estimator = Estimator::Ckor;
    KernelSpec state_kernel = KernelSpec::gaussian(1.0);
    KernelSpec control_kernel = KernelSpec::linear();
    double gamma = 1e-6;
    /// Inducing points (ny-ckor) or dictionary centers (bedmdc); 0 = all training rows.
    std::size_t inducing = 0;
    /// Optional POD energy threshold in percent (ckor / ny-ckor only).
    std::optional<double> pod_tau;
    /// Optional uniform subsample of the training set.
    std::optional<std::size_t> train_size;
    Observable observable;
};

struct SweepConfig {
    std::vector<Estimator> estimators;
    std::vector<double> bandwidths;
    std::vector<double> gammas;
    std::vector<std::size_t> train_sizes;  // empty = the configured model train size
    int repetitions = 1;
    bool record_timing = true;
};

struct EvaluationConfig {
    Index horizon = 1;
};

struct MpcConfig {
    std::optional<std::filesystem::path> model_file;
    std::string controller = "lpv";  // "lpv" or "lmpc"
    MpcProblem problem;
    double duration = 0.0;
    Matrix initial_states;  // one per row
    /// Piecewise-constant state reference as (duration in seconds, target).
    std::vector<std::pair<double, Vector>> reference;
    QpSettings qp;
    double stabilization_tolerance = 0.15;
};

struct ExperimentConfig {
    std::string system = "duffing";
    std::uint64_t seed = 0;
    SimConfig sim;
    DataConfig data;
    ModelConfig model;
    std::optional<SweepConfig> sweep;
    EvaluationConfig evaluation;
    std::optional<MpcConfig> mpc;
    std::filesystem::path output_dir = "out";
};

/// Strict parse: unknown fields, wrong types and out-of-range values raise
/// ConfigError naming the field path (e.g. "model.state_kernel.bandwidth").
/// Relative CSV and model paths are resolved against `base_dir` and must exist.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace ckor
