#include "ckor/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ckor/error.hpp"

namespace ckor {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;
constexpr const char* kFormatName = "ckor-model";

json to_json(const Matrix& M)
{
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(M.size()));
    for (Index i = 0; i < M.rows(); ++i) {
        for (Index j = 0; j < M.cols(); ++j) data.push_back(M(i, j));
    }
    return json{{"rows", M.rows()}, {"cols", M.cols()}, {"data", std::move(data)}};
}

json to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json to_json(const KernelSpec& k)
{
    json j{{"family", std::string(to_string(k.family()))}};
    if (k.uses_bandwidth()) j["bandwidth"] = k.bandwidth();
    return j;
}

json to_json(const Observable& obs)
{
    std::vector<Index> coords = obs.coordinates;
    return json{{"coordinates", coords}};
}

json to_json(const Lifting& l)
{
    return json{{"state_kernel", to_json(l.state_kernel)},
                {"control_kernel", to_json(l.control_kernel)},
                {"x_anchor", to_json(l.x_anchor)},
                {"u_anchor", to_json(l.u_anchor)}};
}

const json& field(const json& j, const char* name)
{
    if (!j.is_object() || !j.contains(name)) throw ParseError(std::string("model file: missing field '") + name + "'", 0);
    return j.at(name);
}

template <class T>
T get(const json& j, const char* name)
{
    try {
        return field(j, name).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("model file: field '") + name + "': " + e.what(), 0);
    }
}

Matrix matrix_from(const json& j, const char* name)
{
    const json& m = field(j, name);
    const auto rows = get<Index>(m, "rows");
    const auto cols = get<Index>(m, "cols");
    const auto data = get<std::vector<double>>(m, "data");
    if (rows < 0 || cols < 0 || static_cast<Index>(data.size()) != rows * cols) {
        throw ParseError(std::string("model file: matrix '") + name + "' has inconsistent size", 0);
    }
    Matrix M(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index c = 0; c < cols; ++c) M(i, c) = data[static_cast<std::size_t>(i * cols + c)];
    }
    return M;
}

Vector vector_from(const json& j, const char* name)
{
    const auto data = get<std::vector<double>>(j, name);
    return Eigen::Map<const Vector>(data.data(), static_cast<Index>(data.size()));
}

KernelSpec kernel_from(const json& j, const char* name)
{
    const json& k = field(j, name);
    const KernelFamily family = kernel_family_from_string(get<std::string>(k, "family"));
    switch (family) {
    case KernelFamily::Gaussian: return KernelSpec::gaussian(get<double>(k, "bandwidth"));
    case KernelFamily::Linear: return KernelSpec::linear();
    case KernelFamily::LinearPlusIdentityAugmentation: return KernelSpec::linear_plus_identity(get<double>(k, "bandwidth"));
    }
    throw ParseError("model file: unknown kernel family", 0);
}

Observable observable_from(const json& j)
{
    return Observable{get<std::vector<Index>>(field(j, "observable"), "coordinates")};
}

Lifting lifting_from(const json& j)
{
    const json& l = field(j, "lifting");
    return Lifting{kernel_from(l, "state_kernel"), kernel_from(l, "control_kernel"), matrix_from(l, "x_anchor"),
                   matrix_from(l, "u_anchor")};
}

ModelFlavor flavor_from(const std::string& s)
{
    if (s == "full") return ModelFlavor::Full;
    if (s == "nystrom") return ModelFlavor::Nystrom;
    throw ParseError("model file: unknown flavor '" + s + "'", 0);
}

json encode(const CkorModel& m)
{
    json j{{"lifting", to_json(m.lifting)},
           {"xplus_anchor", to_json(m.xplus_anchor)},
           {"A", to_json(m.A)},
           {"C", to_json(m.C)},
           {"observable", to_json(m.observable)},
           {"gamma", m.gamma},
           {"flavor", std::string(to_string(m.flavor))},
           {"training_size", m.training_size}};
    if (m.regression.is_factorized()) {
        const SpdSolver& s = m.regression.solver();
        j["regression"] = json{{"type", "cholesky"}, {"factor", to_json(s.factor())}, {"lambda", s.lambda()},
                               {"jitter", s.jitter()}};
    } else {
        j["regression"] = json{{"type", "explicit"}, {"operator", to_json(m.regression.explicit_operator())}};
    }
    return j;
}

json encode(const ReducedModel& m)
{
    json B = json::array();
    for (const Matrix& b : m.B) B.push_back(to_json(b));
    return json{{"lifting", to_json(m.lifting)},
                {"V", to_json(m.V)},
                {"singular_values", to_json(m.singular_values)},
                {"energy_fraction", m.energy_fraction},
                {"A", to_json(m.A)},
                {"B", std::move(B)},
                {"C", to_json(m.C)},
                {"observable", to_json(m.observable)},
                {"gamma", m.gamma},
                {"parent_flavor", std::string(to_string(m.parent_flavor))}};
}

json encode(const BedmdcModel& m)
{
    return json{{"state_kernel", to_json(m.state_kernel)},
                {"centers", to_json(m.centers)},
                {"op", to_json(m.op)},
                {"C", to_json(m.C)},
                {"observable", to_json(m.observable)},
                {"input_dim", m.input_dim},
                {"gamma", m.gamma}};
}

void check(bool ok, const std::string& what)
{
    if (!ok) throw InputError("model file: " + what);
}

CkorModel decode_ckor(const json& j)
{
    CkorModel m;
    m.lifting = lifting_from(j);
    m.xplus_anchor = matrix_from(j, "xplus_anchor");
    m.A = matrix_from(j, "A");
    m.C = matrix_from(j, "C");
    m.observable = observable_from(j);
    m.gamma = get<double>(j, "gamma");
    m.flavor = flavor_from(get<std::string>(j, "flavor"));
    m.training_size = get<Index>(j, "training_size");
    const json& r = field(j, "regression");
    const auto type = get<std::string>(r, "type");
    if (type == "cholesky") {
        m.regression = RegressionOperator(
            SpdSolver::from_factor(matrix_from(r, "factor"), get<double>(r, "lambda"), get<double>(r, "jitter")));
    } else if (type == "explicit") {
        m.regression = RegressionOperator(matrix_from(r, "operator"));
    } else {
        throw ParseError("model file: unknown regression type '" + type + "'", 0);
    }
    const Index N = m.lifting.dim();
    check(m.lifting.u_anchor.rows() == N && m.xplus_anchor.rows() == N, "anchor sets disagree in size");
    check(m.A.rows() == N && m.A.cols() == N, "A must be N x N");
    check(m.C.cols() == N, "C must have N columns");
    return m;
}

ReducedModel decode_reduced(const json& j)
{
    ReducedModel m;
    m.lifting = lifting_from(j);
    m.V = matrix_from(j, "V");
    m.singular_values = vector_from(j, "singular_values");
    m.energy_fraction = get<double>(j, "energy_fraction");
    m.A = matrix_from(j, "A");
    const json& B = field(j, "B");
    if (!B.is_array()) throw ParseError("model file: field 'B' must be an array", 0);
    for (const json& b : B) {
        json wrapper{{"b", b}};
        m.B.push_back(matrix_from(wrapper, "b"));
    }
    m.C = matrix_from(j, "C");
    m.observable = observable_from(j);
    m.gamma = get<double>(j, "gamma");
    m.parent_flavor = flavor_from(get<std::string>(j, "parent_flavor"));
    const Index r = m.V.cols();
    check(m.V.rows() == m.lifting.dim(), "V must have one row per anchor");
    check(m.A.rows() == r && m.A.cols() == r, "A must be r x r");
    check(static_cast<Index>(m.B.size()) == m.lifting.input_dim(), "one B matrix per input is required");
    for (const Matrix& b : m.B) check(b.rows() == r && b.cols() == r, "B matrices must be r x r");
    check(m.C.cols() == r, "C must have r columns");
    return m;
}

BedmdcModel decode_bedmdc(const json& j)
{
    BedmdcModel m;
    m.state_kernel = kernel_from(j, "state_kernel");
    m.centers = matrix_from(j, "centers");
    m.op = matrix_from(j, "op");
    m.C = matrix_from(j, "C");
    m.observable = observable_from(j);
    m.input_dim = get<Index>(j, "input_dim");
    m.gamma = get<double>(j, "gamma");
    const Index c = m.centers.rows();
    check(m.op.rows() == c && m.op.cols() == c * (m.input_dim + 1), "operator has wrong shape");
    check(m.C.cols() == c, "C must have one column per center");
    return m;
}

}  // namespace

std::string_view model_kind(const AnyModel& model)
{
    if (const auto* m = std::get_if<CkorModel>(&model)) return m->flavor == ModelFlavor::Full ? "ckor" : "ny-ckor";
    if (std::holds_alternative<ReducedModel>(model)) return "reduced";
    return "bedmdc";
}

std::string model_to_json(const AnyModel& model)
{
    json doc{{"format", kFormatName}, {"version", kFormatVersion}, {"kind", std::string(model_kind(model))}};
    doc["model"] = std::visit([](const auto& m) { return encode(m); }, model);
    return doc.dump() + "\n";
}

AnyModel model_from_json(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("model file is not valid JSON: ") + e.what(), 0);
    }
    if (get<std::string>(doc, "format") != kFormatName) throw ParseError("not a model file", 0);
    const int version = get<int>(doc, "version");
    if (version != kFormatVersion) {
        throw ParseError("unsupported model file version " + std::to_string(version), 0);
    }
    const auto kind = get<std::string>(doc, "kind");
    const json& body = field(doc, "model");
    if (kind == "ckor" || kind == "ny-ckor") return decode_ckor(body);
    if (kind == "reduced") return decode_reduced(body);
    if (kind == "bedmdc") return decode_bedmdc(body);
    throw ParseError("unknown model kind '" + kind + "'", 0);
}

void save_model(const std::filesystem::path& path, const AnyModel& model)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write model file " + path.string());
    out << model_to_json(model);
    if (!out) throw InputError("failed writing model file " + path.string());
}

AnyModel load_model(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open model file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

}  // namespace ckor
