#include "ckor/cli.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "ckor/error.hpp"
#include "ckor/mpc.hpp"
#include "ckor/rng.hpp"
#include "ckor/systems.hpp"

namespace ckor {

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr double kInf = std::numeric_limits<double>::infinity();

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("failed writing " + path.string());
}

const char* split_name(SeedStream split)
{
    switch (split) {
    case SeedStream::Train: return "train";
    case SeedStream::Validation: return "validation";
    case SeedStream::Test: return "test";
    default: return "data";
    }
}

ordered_json kernel_json(const KernelSpec& k)
{
    ordered_json j;
    j["family"] = std::string(to_string(k.family()));
    if (k.uses_bandwidth()) j["bandwidth"] = k.bandwidth();
    return j;
}

std::string csv_number(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return format_double(v);
}

const DataSource& require_split(const std::optional<DataSource>& src, const char* name)
{
    if (!src) throw ConfigError(std::string("data.") + name, "missing required field");
    return *src;
}

}  // namespace

int exit_code_for(const std::exception& e) noexcept
{
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
        dynamic_cast<const InputError*>(&e) || dynamic_cast<const UnsupportedError*>(&e)) {
        return kExitConfig;
    }
    if (dynamic_cast<const NumericalError*>(&e) || dynamic_cast<const SimulationError*>(&e) ||
        dynamic_cast<const PredictionError*>(&e)) {
        return kExitNumerical;
    }
    return kExitFailure;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

SnapshotDataset load_dataset(const ExperimentConfig& cfg, const DataSource& source, SeedStream split)
{
    const ControlAffineOde ode = system_by_name(cfg.system);
    if (source.csv) return load_csv(*source.csv, CsvDims{ode.state_dim, ode.input_dim});
    if (!source.generate) throw ConfigError(std::string("data.") + split_name(split), "no csv path or generator");
    return generate_snapshots(ode, *source.generate, cfg.sim,
                              derive_seed(cfg.seed, static_cast<std::uint64_t>(split)));
}

AnyModel fit_model(const ModelConfig& mc, const SnapshotDataset& train_full, std::uint64_t seed)
{
    SnapshotDataset train = train_full;
    const auto n = static_cast<std::size_t>(train_full.size());
    if (mc.train_size && *mc.train_size < n) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(SeedStream::Subsample)));
        const std::vector<std::size_t> rows = rng.sample_without_replacement(n, *mc.train_size);
        train = select_rows(train_full, rows);
    } else if (mc.train_size && *mc.train_size > n) {
        throw ConfigError("model.train_size", "exceeds the " + std::to_string(n) + " training rows");
    }
    const auto rows = static_cast<std::size_t>(train.size());
    const std::uint64_t inducing_seed = derive_seed(seed, static_cast<std::uint64_t>(SeedStream::Inducing));
    auto anchors = [&]() {
        if (mc.inducing == 0 || mc.inducing == rows) {
            std::vector<std::size_t> all(rows);
            std::iota(all.begin(), all.end(), std::size_t{0});
            return make_inducing(train, std::move(all));
        }
        if (mc.inducing > rows) {
            throw ConfigError("model.inducing", "exceeds the " + std::to_string(rows) + " training rows");
        }
        return subsample_uniform(train, mc.inducing, inducing_seed);
    };

    const std::string name(to_string(mc.estimator));
    try {
        switch (mc.estimator) {
        case Estimator::Bedmdc:
            if (mc.pod_tau) throw ConfigError("model.pod_tau", "POD applies to ckor and ny-ckor only");
            return fit_bedmdc(train, anchors(), mc.state_kernel, mc.gamma, mc.observable);
        case Estimator::Ckor:
        case Estimator::NyCkor: {
            CkorModel m = mc.estimator == Estimator::Ckor
                              ? fit_ckor(train, mc.state_kernel, mc.control_kernel, mc.gamma, mc.observable)
                              : fit_ny_ckor(train, anchors(), mc.state_kernel, mc.control_kernel, mc.gamma,
                                            mc.observable);
            if (mc.pod_tau) return pod_reduce(m, PodTruncation::threshold(*mc.pod_tau));
            return m;
        }
        }
    } catch (const NumericalError& e) {
        throw NumericalError("fitting " + name + " failed: " + e.what(), e.attempted_jitter());
    }
    throw InputError("unknown estimator");
}

std::vector<fs::path> cmd_generate(const ExperimentConfig& cfg)
{
    const ControlAffineOde ode = system_by_name(cfg.system);
    std::vector<fs::path> written;
    const std::pair<const std::optional<DataSource>*, SeedStream> splits[] = {
        {&cfg.data.train, SeedStream::Train},
        {&cfg.data.validation, SeedStream::Validation},
        {&cfg.data.test, SeedStream::Test},
    };
    for (const auto& [src, split] : splits) {
        if (!*src || !(*src)->generate) continue;
        const SnapshotDataset ds = load_dataset(cfg, **src, split);
        const fs::path path = cfg.output_dir / (std::string(split_name(split)) + ".csv");
        write_text(path, format_csv(ds));
        written.push_back(path);
    }
    if (written.empty()) throw ConfigError("data", "no split has a generator");
    return written;
}

std::string describe_model(const AnyModel& model)
{
    ordered_json j;
    j["kind"] = std::string(model_kind(model));
    j["state_dim"] = state_dim_of(model);
    j["input_dim"] = input_dim_of(model);
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            j["output_dim"] = m.output_dim();
            j["lifted_dim"] = m.lifted_dim();
            j["gamma"] = m.gamma;
            if constexpr (std::is_same_v<T, CkorModel>) {
                j["state_kernel"] = kernel_json(m.lifting.state_kernel);
                j["control_kernel"] = kernel_json(m.lifting.control_kernel);
                j["training_size"] = m.training_size;
            } else if constexpr (std::is_same_v<T, ReducedModel>) {
                j["state_kernel"] = kernel_json(m.lifting.state_kernel);
                j["control_kernel"] = kernel_json(m.lifting.control_kernel);
                j["parent"] = std::string(to_string(m.parent_flavor));
                j["parent_lifted_dim"] = m.V.rows();
                j["pod_rank"] = m.V.cols();
                j["energy_fraction"] = m.energy_fraction;
            } else {
                j["state_kernel"] = kernel_json(m.state_kernel);
                j["dictionary_size"] = m.centers.rows();
                j["regression_dim"] = m.op.cols();
            }
        },
        model);
    const Observable& obs = observable_of(model);
    if (obs.is_full_state()) {
        j["observable"] = "state";
    } else {
        std::vector<Index> one_based;
        for (const Index c : obs.coordinates) one_based.push_back(c + 1);
        j["observable"] = one_based;
    }
    return j.dump(2) + "\n";
}

FitOutput cmd_fit(const ExperimentConfig& cfg)
{
    const SnapshotDataset train = load_dataset(cfg, require_split(cfg.data.train, "train"), SeedStream::Train);
    FitOutput out;
    const auto start = std::chrono::steady_clock::now();
    out.model = fit_model(cfg.model, train, cfg.seed);
    out.fit_seconds = seconds_since(start);

    out.model_path = cfg.output_dir / "model.json";
    save_model(out.model_path, out.model);

    ordered_json report = ordered_json::parse(describe_model(out.model));
    report["estimator"] = std::string(to_string(cfg.model.estimator));
    report["system"] = cfg.system;
    report["seed"] = cfg.seed;
    report["available_rows"] = train.size();
    report["fit_seconds"] = out.fit_seconds;
    out.report_path = cfg.output_dir / "fit_report.json";
    write_text(out.report_path, report.dump(2) + "\n");
    return out;
}

std::string format_sweep_csv(const std::vector<SweepCell>& cells)
{
    std::ostringstream os;
    os << "estimator,train_size,bandwidth,gamma,repetitions,mean_rmse,std_rmse,fit_seconds,predict_seconds,diverged\n";
    for (const SweepCell& c : cells) {
        os << to_string(c.estimator) << ',' << c.train_size << ',' << csv_number(c.bandwidth) << ','
           << csv_number(c.gamma) << ',' << c.repetitions << ',' << csv_number(c.mean_rmse) << ','
           << csv_number(c.std_rmse) << ',' << csv_number(c.fit_seconds) << ',' << csv_number(c.predict_seconds)
           << ',' << (c.diverged ? 1 : 0) << '\n';
    }
    return os.str();
}

SweepOutput run_sweep(const ExperimentConfig& cfg, const SnapshotDataset& train, const SnapshotDataset& test,
                      unsigned workers)
{
    if (!cfg.sweep) throw ConfigError("sweep", "missing required field");
    const SweepConfig& sw = *cfg.sweep;
    const auto n = static_cast<std::size_t>(train.size());
    std::vector<std::size_t> sizes = sw.train_sizes;
    if (sizes.empty()) sizes.push_back(cfg.model.train_size.value_or(n));
    for (const std::size_t s : sizes) {
        if (s > n) throw ConfigError("sweep.train_sizes", "exceeds the " + std::to_string(n) + " training rows");
    }

    std::vector<SweepCell> cells;
    for (const std::size_t size : sizes) {
        for (const Estimator est : sw.estimators) {
            for (const double mu : sw.bandwidths) {
                for (const double gamma : sw.gammas) {
                    SweepCell c;
                    c.estimator = est;
                    c.train_size = size;
                    c.bandwidth = mu;
                    c.gamma = gamma;
                    c.repetitions = sw.repetitions;
                    cells.push_back(c);
                }
            }
        }
    }

    auto run_cell = [&](SweepCell& c) {
        ModelConfig mc = cfg.model;
        mc.estimator = c.estimator;
        mc.gamma = c.gamma;
        mc.train_size = c.train_size < n ? std::optional<std::size_t>(c.train_size) : std::nullopt;
        switch (mc.state_kernel.family()) {
        case KernelFamily::Gaussian: mc.state_kernel = KernelSpec::gaussian(c.bandwidth); break;
        case KernelFamily::LinearPlusIdentityAugmentation:
            mc.state_kernel = KernelSpec::linear_plus_identity(c.bandwidth);
            break;
        case KernelFamily::Linear: break;
        }
        std::vector<double> rmses;
        double fit_total = 0.0;
        double predict_total = 0.0;
        for (int r = 0; r < sw.repetitions; ++r) {
            const std::uint64_t seed = r == 0 ? cfg.seed : derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(r));
            try {
                auto start = std::chrono::steady_clock::now();
                const AnyModel model = fit_model(mc, train, seed);
                fit_total += seconds_since(start);
                start = std::chrono::steady_clock::now();
                const EvaluationResult res = evaluate(model, test, cfg.evaluation.horizon);
                predict_total += seconds_since(start);
                for (const auto& t : res.trajectories) rmses.push_back(t.rmse);
                if (res.diverged) c.diverged = true;
            } catch (const ConfigError&) {
                throw;
            } catch (const Error& e) {
                c.diverged = true;
                if (c.error.empty()) c.error = e.what();
            }
        }
        if (c.diverged || rmses.empty()) {
            c.mean_rmse = kInf;
            c.std_rmse = kInf;
        } else {
            const double count = static_cast<double>(rmses.size());
            c.mean_rmse = std::accumulate(rmses.begin(), rmses.end(), 0.0) / count;
            double var = 0.0;
            for (const double v : rmses) var += (v - c.mean_rmse) * (v - c.mean_rmse);
            c.std_rmse = std::sqrt(var / count);
        }
        if (sw.record_timing) {
            c.fit_seconds = fit_total / sw.repetitions;
            c.predict_seconds = predict_total / sw.repetitions;
        }
    };

    const unsigned threads =
        std::max(1u, std::min<unsigned>(workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : workers,
                                        static_cast<unsigned>(cells.size())));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                run_cell(cells[i]);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = cells.size();
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    SweepOutput out;
    out.cells = std::move(cells);
    for (const SweepCell& c : out.cells) out.partial = out.partial || c.diverged;
    return out;
}

SweepOutput cmd_sweep(const ExperimentConfig& cfg, unsigned workers)
{
    const SnapshotDataset train = load_dataset(cfg, require_split(cfg.data.train, "train"), SeedStream::Train);
    const SnapshotDataset test = load_dataset(cfg, require_split(cfg.data.test, "test"), SeedStream::Test);
    SweepOutput out = run_sweep(cfg, train, test, workers);
    out.csv_path = cfg.output_dir / "sweep.csv";
    write_text(out.csv_path, format_sweep_csv(out.cells));
    return out;
}

std::string format_prediction_csv(const TrajectoryPrediction& traj, double sample_time)
{
    std::ostringstream os;
    os << "time";
    for (Index j = 0; j < traj.y_true.cols(); ++j) os << ",y_true_" << j + 1;
    for (Index j = 0; j < traj.y_pred.cols(); ++j) os << ",y_pred_" << j + 1;
    os << '\n';
    for (std::size_t k = 0; k < traj.steps.size(); ++k) {
        const auto row = static_cast<Index>(k);
        os << format_double(static_cast<double>(traj.steps[k]) * sample_time);
        for (Index j = 0; j < traj.y_true.cols(); ++j) os << ',' << csv_number(traj.y_true(row, j));
        for (Index j = 0; j < traj.y_pred.cols(); ++j) {
            os << ',' << (row < traj.y_pred.rows() ? csv_number(traj.y_pred(row, j)) : "nan");
        }
        os << '\n';
    }
    return os.str();
}

std::string format_prediction_summary(const EvaluationResult& result)
{
    std::ostringstream os;
    os << "trajectory,samples,rmse,nrmse,diverged\n";
    double nrmse_sum = 0.0;
    std::size_t samples = 0;
    for (std::size_t i = 0; i < result.trajectories.size(); ++i) {
        const TrajectoryPrediction& t = result.trajectories[i];
        os << i + 1 << ',' << t.steps.size() << ',' << csv_number(t.rmse) << ',' << csv_number(t.nrmse) << ','
           << (t.diverged ? 1 : 0) << '\n';
        nrmse_sum += t.nrmse;
        samples += t.steps.size();
    }
    const double count = static_cast<double>(result.trajectories.size());
    os << "mean," << samples << ',' << csv_number(result.mean_rmse) << ','
       << csv_number(count > 0 ? nrmse_sum / count : kInf) << ',' << (result.diverged ? 1 : 0) << '\n';
    return os.str();
}

PredictOutput cmd_predict(const AnyModel& model, const SnapshotDataset& data, Index horizon, double sample_time,
                          const fs::path& out_dir)
{
    PredictOutput out;
    out.result = evaluate(model, data, horizon);
    for (std::size_t i = 0; i < out.result.trajectories.size(); ++i) {
        const fs::path path = out_dir / "predictions" / ("trajectory_" + std::to_string(i + 1) + ".csv");
        write_text(path, format_prediction_csv(out.result.trajectories[i], sample_time));
        out.trajectory_files.push_back(path);
    }
    out.summary_path = out_dir / "prediction_summary.csv";
    write_text(out.summary_path, format_prediction_summary(out.result));
    return out;
}

std::string format_mpc_summary(const std::vector<MpcRun>& runs)
{
    std::ostringstream os;
    os << "run";
    const Index nx = runs.empty() ? 0 : runs.front().x0.size();
    for (Index j = 0; j < nx; ++j) os << ",x0_" << j + 1;
    for (Index j = 0; j < nx; ++j) os << ",x_final_" << j + 1;
    os << ",final_error,stabilized,failed,steps,mean_iterations,nonconverged_steps\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const MpcRun& r = runs[i];
        os << i + 1;
        for (Index j = 0; j < nx; ++j) os << ',' << csv_number(r.x0[j]);
        for (Index j = 0; j < nx; ++j) {
            os << ',' << (r.log.final_state.size() == nx ? csv_number(r.log.final_state[j]) : "nan");
        }
        double iters = 0.0;
        int nonconverged = 0;
        for (std::size_t k = 0; k < r.log.iterations.size(); ++k) {
            iters += r.log.iterations[k];
            if (!r.log.converged[k]) ++nonconverged;
        }
        const double mean_iters = r.log.iterations.empty() ? 0.0 : iters / static_cast<double>(r.log.iterations.size());
        os << ',' << csv_number(r.final_error) << ',' << (r.stabilized ? 1 : 0) << ',' << (r.log.failed ? 1 : 0) << ','
           << r.log.steps() << ',' << csv_number(mean_iters) << ',' << nonconverged << '\n';
    }
    return os.str();
}

MpcOutput cmd_mpc(const ExperimentConfig& cfg)
{
    if (!cfg.mpc) throw ConfigError("mpc", "missing required field");
    const MpcConfig& mc = *cfg.mpc;
    const ControlAffineOde ode = system_by_name(cfg.system);
    const double ts = cfg.sim.sample_time;

    std::vector<std::pair<Index, Vector>> segments;
    for (const auto& [seconds, target] : mc.reference) {
        segments.emplace_back(static_cast<Index>(std::llround(seconds / ts)), target);
    }
    const Vector final_reference = segments.back().second;
    const ReferenceFn reference = piecewise_reference(segments, ode.input_dim);

    std::unique_ptr<Controller> controller;
    if (mc.controller == "lmpc") {
        controller = std::make_unique<LmpcController>(lmpc_baseline(ode, Vector::Zero(ode.state_dim),
                                                                    Vector::Zero(ode.input_dim), mc.problem,
                                                                    reference, cfg.sim, mc.qp));
    } else {
        AnyModel model;
        if (mc.model_file) {
            model = load_model(*mc.model_file);
        } else {
            const SnapshotDataset train =
                load_dataset(cfg, require_split(cfg.data.train, "train"), SeedStream::Train);
            model = fit_model(cfg.model, train, cfg.seed);
        }
        if (state_dim_of(model) != ode.state_dim || input_dim_of(model) != ode.input_dim) {
            throw InputError("model dimensions do not match system '" + cfg.system + "'");
        }
        if (!observable_of(model).is_full_state()) {
            throw UnsupportedError("MPC needs a model whose observable is the full state");
        }
        LpvModel lpv = std::visit(
            [](const auto& m) -> LpvModel {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, BedmdcModel>) {
                    throw UnsupportedError("MPC supports ckor, ny-ckor and reduced models");
                } else {
                    return LpvModel::from(m);
                }
            },
            model);
        controller = std::make_unique<LpvMpcController>(std::move(lpv), mc.problem, reference, mc.qp);
    }

    MpcOutput out;
    for (Index i = 0; i < mc.initial_states.rows(); ++i) {
        MpcRun run;
        run.x0 = mc.initial_states.row(i).transpose();
        run.log = closed_loop(*controller, ode, run.x0, mc.duration, cfg.sim);
        run.final_reference = final_reference;
        run.final_error = run.log.final_state.size() == final_reference.size()
                              ? (run.log.final_state - final_reference).lpNorm<Eigen::Infinity>()
                              : kInf;
        if (!std::isfinite(run.final_error)) run.final_error = kInf;
        run.stabilized = !run.log.failed && run.final_error <= mc.stabilization_tolerance;
        run.log_path = cfg.output_dir / ("closed_loop_" + std::to_string(i + 1) + ".csv");
        write_text(run.log_path, format_closed_loop_csv(run.log));
        out.runs.push_back(std::move(run));
    }
    out.summary_path = cfg.output_dir / "mpc_summary.csv";
    write_text(out.summary_path, format_mpc_summary(out.runs));
    return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Kernel control Koopman operator regression: data, fitting, evaluation and MPC", "ckor"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    unsigned workers = 0;
    std::string model_path;
    std::string data_path;
    std::optional<Index> horizon;
    std::optional<double> sample_time;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("--config", config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
        if (config_required) opt->required();
        sub->add_option("--seed", seed, "Override the config seed");
        sub->add_option("--out", out_dir, "Override the output directory");
    };

    CLI::App* generate = app.add_subcommand("generate", "Write train/validation/test snapshot CSVs");
    add_common(generate, true);
    CLI::App* fit = app.add_subcommand("fit", "Fit the configured estimator; write model.json and fit_report.json");
    add_common(fit, true);
    CLI::App* sweep = app.add_subcommand("sweep", "Grid search over estimators, bandwidths, gammas and sizes");
    add_common(sweep, true);
    sweep->add_option("--workers", workers, "Parallel cells (0 = hardware threads)");
    CLI::App* predict = app.add_subcommand("predict", "Multi-step prediction of a saved model on a dataset");
    add_common(predict, false);
    predict->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
    predict->add_option("--data", data_path, "Snapshot CSV (default: the config test split)")
        ->check(CLI::ExistingFile);
    predict->add_option("--horizon", horizon, "Prediction horizon")->check(CLI::PositiveNumber);
    predict->add_option("--sample-time", sample_time, "Sample time for the time column")
        ->check(CLI::PositiveNumber);
    CLI::App* mpc = app.add_subcommand("mpc", "Closed-loop MPC simulation");
    add_common(mpc, true);
    CLI::App* inspect = app.add_subcommand("inspect-model", "Print a model summary");
    inspect->add_option("model", model_path, "Model file")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitSuccess : kExitConfig;
    }

    try {
        ExperimentConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (!out_dir.empty()) cfg.output_dir = out_dir;

        if (generate->parsed()) {
            for (const fs::path& p : cmd_generate(cfg)) out << "wrote " << p.string() << '\n';
            return kExitSuccess;
        }
        if (fit->parsed()) {
            const FitOutput res = cmd_fit(cfg);
            out << "fitted " << model_kind(res.model) << " in " << res.fit_seconds << " s\n";
            out << "wrote " << res.model_path.string() << '\n' << "wrote " << res.report_path.string() << '\n';
            return kExitSuccess;
        }
        if (sweep->parsed()) {
            const SweepOutput res = cmd_sweep(cfg, workers);
            out << "wrote " << res.csv_path.string() << " (" << res.cells.size() << " cells)\n";
            if (res.partial) {
                err << "some cells diverged; their RMSE is recorded as inf\n";
                return kExitPartial;
            }
            return kExitSuccess;
        }
        if (predict->parsed()) {
            const AnyModel model = load_model(model_path);
            SnapshotDataset data;
            if (!data_path.empty()) {
                data = load_csv(data_path);
            } else if (!config_path.empty()) {
                data = load_dataset(cfg, require_split(cfg.data.test, "test"), SeedStream::Test);
            } else {
                throw ConfigError("--data", "needs --data or --config with a test split");
            }
            const Index h = horizon.value_or(cfg.evaluation.horizon);
            const double ts = sample_time.value_or(cfg.sim.sample_time);
            const PredictOutput res = cmd_predict(model, data, h, ts, cfg.output_dir);
            out << "mean RMSE " << csv_number(res.result.mean_rmse) << " over " << res.result.trajectories.size()
                << " trajectories\n";
            out << "wrote " << res.summary_path.string() << '\n';
            return res.result.diverged ? kExitPartial : kExitSuccess;
        }
        if (mpc->parsed()) {
            const MpcOutput res = cmd_mpc(cfg);
            bool any_failed = false;
            for (std::size_t i = 0; i < res.runs.size(); ++i) {
                const MpcRun& r = res.runs[i];
                out << "run " << i + 1 << ": final error " << csv_number(r.final_error)
                    << (r.stabilized ? " (reached)" : " (not reached)");
                if (r.log.failed) out << ", failed: " << r.log.failure;
                out << '\n';
                any_failed = any_failed || r.log.failed;
            }
            out << "wrote " << res.summary_path.string() << '\n';
            return any_failed ? kExitPartial : kExitSuccess;
        }
        if (inspect->parsed()) {
            out << describe_model(load_model(model_path));
            return kExitSuccess;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return kExitFailure;
}

}  // namespace ckor
