#include "ckor/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ckor/error.hpp"

namespace ckor {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Cursor into the document that remembers its dotted path for error messages.
class Node {
public:
    Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

    const std::string& path() const { return path_; }
    [[noreturn]] void fail(const std::string& what) const { throw ConfigError(path_, what); }

    void expect_object(std::initializer_list<const char*> allowed) const
    {
        if (!j_->is_object()) fail("expected an object");
        const std::set<std::string> keys(allowed.begin(), allowed.end());
        for (const auto& item : j_->items()) {
            if (!keys.count(item.key())) throw ConfigError(child_path(item.key()), "unknown field");
        }
    }

    bool has(const char* key) const { return j_->is_object() && j_->contains(key); }

    Node at(const char* key) const
    {
        if (!has(key)) throw ConfigError(child_path(key), "missing required field");
        return Node(j_->at(key), child_path(key));
    }

    Node index(std::size_t i) const { return Node(j_->at(i), path_ + "[" + std::to_string(i) + "]"); }

    std::size_t size() const
    {
        if (!j_->is_array()) fail("expected an array");
        return j_->size();
    }

    double number() const
    {
        if (!j_->is_number()) fail("expected a number");
        return j_->get<double>();
    }

    /// Number, or null meaning an infinite bound with the given sign.
    double bound(double if_null) const { return j_->is_null() ? if_null : number(); }

    std::int64_t integer() const
    {
        if (!j_->is_number_integer()) fail("expected an integer");
        return j_->get<std::int64_t>();
    }

    std::uint64_t unsigned_integer() const
    {
        if (!j_->is_number_integer() || j_->get<std::int64_t>() < 0) {
            if (!j_->is_number_unsigned()) fail("expected a non-negative integer");
        }
        return j_->get<std::uint64_t>();
    }

    bool boolean() const
    {
        if (!j_->is_boolean()) fail("expected true or false");
        return j_->get<bool>();
    }

    std::string string() const
    {
        if (!j_->is_string()) fail("expected a string");
        return j_->get<std::string>();
    }

    Vector vector() const
    {
        const std::size_t n = size();
        Vector v(static_cast<Index>(n));
        for (std::size_t i = 0; i < n; ++i) v[static_cast<Index>(i)] = index(i).number();
        return v;
    }

    Vector bounds(double if_null) const
    {
        const std::size_t n = size();
        Vector v(static_cast<Index>(n));
        for (std::size_t i = 0; i < n; ++i) v[static_cast<Index>(i)] = index(i).bound(if_null);
        return v;
    }

    Matrix rows() const
    {
        const std::size_t n = size();
        if (n == 0) fail("expected at least one row");
        Matrix M;
        for (std::size_t i = 0; i < n; ++i) {
            const Vector row = index(i).vector();
            if (i == 0) M.resize(static_cast<Index>(n), row.size());
            if (row.size() != M.cols()) index(i).fail("rows must have equal length");
            M.row(static_cast<Index>(i)) = row.transpose();
        }
        return M;
    }

private:
    std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* j_;
    std::string path_;
};

double positive(const Node& n)
{
    const double v = n.number();
    if (!(v > 0.0) || !std::isfinite(v)) n.fail("must be a positive finite number");
    return v;
}

Index positive_index(const Node& n)
{
    const std::int64_t v = n.integer();
    if (v < 1) n.fail("must be >= 1");
    return static_cast<Index>(v);
}

Box box_from(const Node& n, Index expected_dim)
{
    Box b{n.at("lower").vector(), n.at("upper").vector()};
    if (b.lower.size() != expected_dim || b.upper.size() != expected_dim) {
        n.fail("lower/upper must have length " + std::to_string(expected_dim));
    }
    if ((b.lower.array() > b.upper.array()).any()) n.fail("lower exceeds upper");
    return b;
}

KernelSpec kernel_from(const Node& n)
{
    n.expect_object({"family", "bandwidth"});
    const Node fam = n.at("family");
    KernelFamily family;
    try {
        family = kernel_family_from_string(fam.string());
    } catch (const InputError& e) {
        fam.fail(e.what());
    }
    switch (family) {
    case KernelFamily::Gaussian: return KernelSpec::gaussian(positive(n.at("bandwidth")));
    case KernelFamily::LinearPlusIdentityAugmentation: return KernelSpec::linear_plus_identity(positive(n.at("bandwidth")));
    case KernelFamily::Linear:
        if (n.has("bandwidth")) n.at("bandwidth").fail("the linear kernel has no bandwidth");
        return KernelSpec::linear();
    }
    n.fail("unknown kernel family");
}

InitialConditionSpec initial_conditions_from(const Node& n, Index nx)
{
    const std::string type = n.at("type").string();
    if (type == "grid") {
        n.expect_object({"type", "points_per_dim", "lower", "upper"});
        const Node ppd = n.at("points_per_dim");
        GridInitialConditions g;
        for (std::size_t i = 0; i < ppd.size(); ++i) g.points_per_dim.push_back(static_cast<int>(positive_index(ppd.index(i))));
        if (static_cast<Index>(g.points_per_dim.size()) != nx) ppd.fail("needs one entry per state");
        g.box = box_from(n, nx);
        return g;
    }
    if (type == "random") {
        n.expect_object({"type", "count", "lower", "upper"});
        return RandomInitialConditions{static_cast<std::size_t>(positive_index(n.at("count"))), box_from(n, nx)};
    }
    if (type == "explicit") {
        n.expect_object({"type", "states"});
        Matrix states = n.at("states").rows();
        if (states.cols() != nx) n.at("states").fail("states must have " + std::to_string(nx) + " entries");
        return ExplicitInitialConditions{std::move(states)};
    }
    n.at("type").fail("unknown initial condition type '" + type + "' (grid, random, explicit)");
}

InputLaw input_law_from(const Node& n, Index nu)
{
    const std::string type = n.at("type").string();
    if (type == "uniform") {
        n.expect_object({"type", "lower", "upper"});
        return UniformRandomInput{box_from(n, nu)};
    }
    if (type == "sinusoid") {
        n.expect_object({"type", "amplitude", "angular_frequency", "phase"});
        SinusoidInput s;
        s.amplitude = n.at("amplitude").number();
        s.angular_frequency = n.at("angular_frequency").number();
        if (n.has("phase")) s.phase = n.at("phase").number();
        return s;
    }
    if (type == "feedback_disturbance") {
        n.expect_object({"type", "feedback", "lower", "upper"});
        const Node fb = n.at("feedback");
        if (fb.string() != "van_der_pol_optimal") fb.fail("unknown feedback law (van_der_pol_optimal)");
        return FeedbackWithDisturbance{van_der_pol_optimal_feedback, box_from(n, nu)};
    }
    n.at("type").fail("unknown input type '" + type + "' (uniform, sinusoid, feedback_disturbance)");
}

DataSource source_from(const Node& n, const ControlAffineOde& ode, const std::filesystem::path& base)
{
    DataSource src;
    if (n.has("csv")) {
        n.expect_object({"csv"});
        const Node p = n.at("csv");
        std::filesystem::path path = p.string();
        if (path.is_relative()) path = base / path;
        if (!std::filesystem::exists(path)) p.fail("file does not exist: " + path.string());
        src.csv = path;
        return src;
    }
    n.expect_object({"initial_conditions", "input", "length"});
    TrajectorySpec spec;
    spec.initial_conditions = initial_conditions_from(n.at("initial_conditions"), ode.state_dim);
    spec.input_law = input_law_from(n.at("input"), ode.input_dim);
    spec.length = static_cast<std::size_t>(positive_index(n.at("length")));
    src.generate = std::move(spec);
    return src;
}

std::vector<std::size_t> coordinates_from(const Node& n, Index nx)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n.size(); ++i) {
        const Index c = positive_index(n.index(i));
        if (c > nx) n.index(i).fail("state coordinate out of range (1.." + std::to_string(nx) + ")");
        out.push_back(static_cast<std::size_t>(c));
    }
    return out;
}

ModelConfig model_from(const Node& n, Index nx)
{
    n.expect_object({"estimator", "state_kernel", "control_kernel", "gamma", "inducing", "pod_tau", "train_size",
                     "observable"});
    ModelConfig m;
    if (n.has("estimator")) {
        const Node e = n.at("estimator");
        try {
            m.estimator = estimator_from_string(e.string());
        } catch (const InputError& err) {
            e.fail(err.what());
        }
    }
    if (n.has("state_kernel")) m.state_kernel = kernel_from(n.at("state_kernel"));
    if (n.has("control_kernel")) m.control_kernel = kernel_from(n.at("control_kernel"));
    if (n.has("gamma")) m.gamma = positive(n.at("gamma"));
    if (n.has("inducing")) m.inducing = static_cast<std::size_t>(positive_index(n.at("inducing")));
    if (n.has("pod_tau")) {
        const Node t = n.at("pod_tau");
        const double tau = t.number();
        if (!(tau > 0.0 && tau <= 100.0)) t.fail("must lie in (0, 100]");
        m.pod_tau = tau;
    }
    if (n.has("train_size")) m.train_size = static_cast<std::size_t>(positive_index(n.at("train_size")));
    if (n.has("observable")) {
        for (const std::size_t c : coordinates_from(n.at("observable"), nx)) {
            m.observable.coordinates.push_back(static_cast<Index>(c - 1));
        }
    }
    return m;
}

SweepConfig sweep_from(const Node& n)
{
    n.expect_object({"estimators", "bandwidths", "gammas", "train_sizes", "repetitions", "record_timing"});
    SweepConfig s;
    const Node est = n.at("estimators");
    for (std::size_t i = 0; i < est.size(); ++i) {
        try {
            s.estimators.push_back(estimator_from_string(est.index(i).string()));
        } catch (const InputError& e) {
            est.index(i).fail(e.what());
        }
    }
    if (s.estimators.empty()) est.fail("grid must not be empty");
    const Node bw = n.at("bandwidths");
    for (std::size_t i = 0; i < bw.size(); ++i) s.bandwidths.push_back(positive(bw.index(i)));
    if (s.bandwidths.empty()) bw.fail("grid must not be empty");
    const Node gm = n.at("gammas");
    for (std::size_t i = 0; i < gm.size(); ++i) s.gammas.push_back(positive(gm.index(i)));
    if (s.gammas.empty()) gm.fail("grid must not be empty");
    if (n.has("train_sizes")) {
        const Node ts = n.at("train_sizes");
        for (std::size_t i = 0; i < ts.size(); ++i) s.train_sizes.push_back(static_cast<std::size_t>(positive_index(ts.index(i))));
        if (s.train_sizes.empty()) ts.fail("grid must not be empty");
    }
    if (n.has("repetitions")) s.repetitions = static_cast<int>(positive_index(n.at("repetitions")));
    if (n.has("record_timing")) s.record_timing = n.at("record_timing").boolean();
    return s;
}

Matrix diagonal_weight(const Node& n, Index dim)
{
    const Vector d = n.vector();
    if (d.size() != dim) n.fail("needs " + std::to_string(dim) + " entries");
    if ((d.array() < 0.0).any()) n.fail("weights must be non-negative");
    return d.asDiagonal();
}

MpcConfig mpc_from(const Node& n, const ControlAffineOde& ode, const std::filesystem::path& base)
{
    n.expect_object({"model_file", "controller", "Q_diag", "R_diag", "Q_terminal_diag", "horizon", "x_min", "x_max",
                     "u_min", "u_max", "duration", "initial_states", "reference", "qp", "stabilization_tolerance"});
    const Index nx = ode.state_dim;
    const Index nu = ode.input_dim;
    MpcConfig m;
    if (n.has("model_file")) {
        const Node p = n.at("model_file");
        std::filesystem::path path = p.string();
        if (path.is_relative()) path = base / path;
        if (!std::filesystem::exists(path)) p.fail("file does not exist: " + path.string());
        m.model_file = path;
    }
    if (n.has("controller")) {
        const Node c = n.at("controller");
        m.controller = c.string();
        if (m.controller != "lpv" && m.controller != "lmpc") c.fail("expected 'lpv' or 'lmpc'");
    }
    MpcProblem& p = m.problem;
    p.Q = diagonal_weight(n.at("Q_diag"), nx);
    p.R = diagonal_weight(n.at("R_diag"), nu);
    if (!(p.R.diagonal().array() > 0.0).all()) n.at("R_diag").fail("input weights must be positive");
    p.Q_terminal = n.has("Q_terminal_diag") ? diagonal_weight(n.at("Q_terminal_diag"), nx) : Matrix(p.Q);
    p.horizon = positive_index(n.at("horizon"));
    auto bound_vec = [&](const char* key, Index dim, double fallback) -> Vector {
        if (!n.has(key)) return Vector::Constant(dim, fallback);
        const Vector v = n.at(key).bounds(fallback);
        if (v.size() != dim) n.at(key).fail("needs " + std::to_string(dim) + " entries");
        return v;
    };
    p.x_min = bound_vec("x_min", nx, -kInf);
    p.x_max = bound_vec("x_max", nx, kInf);
    p.u_min = bound_vec("u_min", nu, -kInf);
    p.u_max = bound_vec("u_max", nu, kInf);
    if ((p.x_min.array() > p.x_max.array()).any()) n.at("x_min").fail("exceeds x_max");
    if ((p.u_min.array() > p.u_max.array()).any()) n.at("u_min").fail("exceeds u_max");
    const Node dur = n.at("duration");
    m.duration = dur.number();
    if (!(m.duration >= 0.0) || !std::isfinite(m.duration)) dur.fail("must be a non-negative number");
    m.initial_states = n.at("initial_states").rows();
    if (m.initial_states.cols() != nx) n.at("initial_states").fail("rows must have " + std::to_string(nx) + " entries");
    if (n.has("reference")) {
        const Node r = n.at("reference");
        for (std::size_t i = 0; i < r.size(); ++i) {
            const Node seg = r.index(i);
            seg.expect_object({"duration", "state"});
            const double d = seg.at("duration").number();
            if (!(d >= 0.0)) seg.at("duration").fail("must be non-negative");
            Vector x = seg.at("state").vector();
            if (x.size() != nx) seg.at("state").fail("needs " + std::to_string(nx) + " entries");
            m.reference.emplace_back(d, std::move(x));
        }
    }
    if (m.reference.empty()) m.reference.emplace_back(m.duration, Vector::Zero(nx));
    if (n.has("qp")) {
        const Node q = n.at("qp");
        q.expect_object({"tol", "max_iter"});
        if (q.has("tol")) m.qp.tol = positive(q.at("tol"));
        if (q.has("max_iter")) m.qp.max_iter = static_cast<int>(positive_index(q.at("max_iter")));
    }
    if (n.has("stabilization_tolerance")) m.stabilization_tolerance = positive(n.at("stabilization_tolerance"));
    return m;
}

}  // namespace

std::string_view to_string(Estimator e)
{
    switch (e) {
    case Estimator::Ckor: return "ckor";
    case Estimator::NyCkor: return "ny-ckor";
    case Estimator::Bedmdc: return "bedmdc";
    }
    return "unknown";
}

Estimator estimator_from_string(const std::string& name)
{
    if (name == "ckor") return Estimator::Ckor;
    if (name == "ny-ckor") return Estimator::NyCkor;
    if (name == "bedmdc") return Estimator::Bedmdc;
    throw InputError("unknown estimator '" + name + "' (ckor, ny-ckor, bedmdc)");
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("config is not valid JSON: ") + e.what());
    }
    const Node root(doc, "");
    root.expect_object({"system", "seed", "sample_time", "substeps", "input_bounds", "data", "model", "sweep",
                        "evaluation", "mpc", "output_dir"});
    ExperimentConfig cfg;
    if (root.has("system")) cfg.system = root.at("system").string();
    ControlAffineOde ode;
    try {
        ode = system_by_name(cfg.system);
    } catch (const InputError& e) {
        root.at("system").fail(e.what());
    }
    if (root.has("seed")) cfg.seed = root.at("seed").unsigned_integer();
    if (root.has("sample_time")) cfg.sim.sample_time = positive(root.at("sample_time"));
    if (root.has("substeps")) cfg.sim.substeps = static_cast<int>(positive_index(root.at("substeps")));
    if (root.has("input_bounds")) {
        const Node b = root.at("input_bounds");
        b.expect_object({"lower", "upper"});
        cfg.sim.input_bounds = box_from(b, ode.input_dim);
    }
    if (root.has("data")) {
        const Node d = root.at("data");
        d.expect_object({"train", "validation", "test"});
        if (d.has("train")) cfg.data.train = source_from(d.at("train"), ode, base_dir);
        if (d.has("validation")) cfg.data.validation = source_from(d.at("validation"), ode, base_dir);
        if (d.has("test")) cfg.data.test = source_from(d.at("test"), ode, base_dir);
    }
    if (root.has("model")) cfg.model = model_from(root.at("model"), ode.state_dim);
    if (root.has("sweep")) cfg.sweep = sweep_from(root.at("sweep"));
    if (root.has("evaluation")) {
        const Node e = root.at("evaluation");
        e.expect_object({"horizon"});
        if (e.has("horizon")) cfg.evaluation.horizon = positive_index(e.at("horizon"));
    }
    if (root.has("mpc")) cfg.mpc = mpc_from(root.at("mpc"), ode, base_dir);
    if (root.has("output_dir")) {
        std::filesystem::path out = root.at("output_dir").string();
        cfg.output_dir = out.is_relative() ? base_dir / out : out;
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", "cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

}  // namespace ckor
