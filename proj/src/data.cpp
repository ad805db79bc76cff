#include "ckor/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <system_error>

#include "ckor/error.hpp"
#include "ckor/rng.hpp"

namespace ckor {

SnapshotDataset::SnapshotDataset(Matrix x, Matrix u, Matrix x_plus, std::vector<std::size_t> segs)
    : X(std::move(x)), U(std::move(u)), X_plus(std::move(x_plus)), segments(std::move(segs))
{
    validate();
}

void SnapshotDataset::validate() const
{
    if (X.rows() < 1) throw InputError("dataset must contain at least one snapshot");
    if (U.rows() != X.rows() || X_plus.rows() != X.rows()) {
        throw InputError("dataset row counts differ: X=" + std::to_string(X.rows()) + " U=" +
                         std::to_string(U.rows()) + " X_plus=" + std::to_string(X_plus.rows()));
    }
    if (X_plus.cols() != X.cols()) throw InputError("X and X_plus have different state dimensions");
    if (!segments.empty()) {
        const auto total = std::accumulate(segments.begin(), segments.end(), std::size_t{0});
        if (total != static_cast<std::size_t>(X.rows())) {
            throw InputError("segment lengths sum to " + std::to_string(total) + ", expected " +
                             std::to_string(X.rows()));
        }
        if (std::find(segments.begin(), segments.end(), std::size_t{0}) != segments.end()) {
            throw InputError("segment lengths must be positive");
        }
    }
}

std::vector<std::size_t> SnapshotDataset::segment_offsets() const
{
    std::vector<std::size_t> offsets(segments.size());
    std::exclusive_scan(segments.begin(), segments.end(), offsets.begin(), std::size_t{0});
    return offsets;
}

SnapshotDataset concat(std::span<const SnapshotDataset> parts)
{
    if (parts.empty()) throw InputError("concat: no datasets given");
    Index rows = 0;
    for (const auto& p : parts) {
        if (p.state_dim() != parts[0].state_dim() || p.input_dim() != parts[0].input_dim()) {
            throw InputError("concat: datasets have different dimensions");
        }
        rows += p.size();
    }
    SnapshotDataset out;
    out.X.resize(rows, parts[0].state_dim());
    out.U.resize(rows, parts[0].input_dim());
    out.X_plus.resize(rows, parts[0].state_dim());
    Index at = 0;
    bool all_segmented = true;
    for (const auto& p : parts) {
        out.X.middleRows(at, p.size()) = p.X;
        out.U.middleRows(at, p.size()) = p.U;
        out.X_plus.middleRows(at, p.size()) = p.X_plus;
        at += p.size();
        all_segmented = all_segmented && !p.segments.empty();
    }
    for (const auto& p : parts) {
        if (all_segmented) {
            out.segments.insert(out.segments.end(), p.segments.begin(), p.segments.end());
        }
    }
    out.validate();
    return out;
}

SnapshotDataset select_rows(const SnapshotDataset& ds, std::span<const std::size_t> indices)
{
    SnapshotDataset out;
    const auto m = static_cast<Index>(indices.size());
    out.X.resize(m, ds.state_dim());
    out.U.resize(m, ds.input_dim());
    out.X_plus.resize(m, ds.state_dim());
    for (Index i = 0; i < m; ++i) {
        const auto r = static_cast<Index>(indices[static_cast<std::size_t>(i)]);
        if (r < 0 || r >= ds.size()) throw InputError("select_rows: index out of range");
        out.X.row(i) = ds.X.row(r);
        out.U.row(i) = ds.U.row(r);
        out.X_plus.row(i) = ds.X_plus.row(r);
    }
    out.validate();
    return out;
}

SnapshotDataset select_segments(const SnapshotDataset& ds, std::size_t first, std::size_t count)
{
    if (ds.segments.empty()) throw InputError("select_segments: dataset has no trajectory segments");
    if (first + count > ds.segments.size() || count == 0) {
        throw InputError("select_segments: range exceeds the " + std::to_string(ds.segments.size()) +
                         " available segments");
    }
    const auto offsets = ds.segment_offsets();
    const auto begin = static_cast<Index>(offsets[first]);
    Index rows = 0;
    for (std::size_t s = first; s < first + count; ++s) rows += static_cast<Index>(ds.segments[s]);
    return SnapshotDataset(ds.X.middleRows(begin, rows), ds.U.middleRows(begin, rows),
                           ds.X_plus.middleRows(begin, rows),
                           {ds.segments.begin() + static_cast<std::ptrdiff_t>(first),
                            ds.segments.begin() + static_cast<std::ptrdiff_t>(first + count)});
}

DatasetSplit split_by_segments(const SnapshotDataset& ds, std::size_t train, std::size_t validation)
{
    const std::size_t total = ds.segments.size();
    if (train == 0 || train + validation >= total) {
        throw InputError("split_by_segments: need at least one segment in every part (have " +
                         std::to_string(total) + ")");
    }
    DatasetSplit split;
    split.train = select_segments(ds, 0, train);
    if (validation > 0) split.validation = select_segments(ds, train, validation);
    split.test = select_segments(ds, train + validation, total - train - validation);
    return split;
}

InducingSet make_inducing(const SnapshotDataset& ds, std::vector<std::size_t> indices)
{
    if (indices.empty()) throw InputError("inducing set must contain at least one point");
    std::vector<std::size_t> sorted = indices;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw InputError("inducing indices must be distinct");
    }
    if (sorted.back() >= static_cast<std::size_t>(ds.size())) throw InputError("inducing index out of range");
    const SnapshotDataset sub = select_rows(ds, indices);
    return InducingSet{std::move(indices), sub.X, sub.U, sub.X_plus};
}

InducingSet subsample_uniform(const SnapshotDataset& ds, std::size_t m, std::uint64_t seed)
{
    const auto n = static_cast<std::size_t>(ds.size());
    if (m < 1 || m > n) {
        throw InputError("subsample_uniform: m must lie in [1, " + std::to_string(n) + "], got " +
                         std::to_string(m));
    }
    Rng rng(seed);
    return make_inducing(ds, rng.sample_without_replacement(n, m));
}

// ---------------------------------------------------------------- Normalizer

Normalizer::Normalizer(Vector state_shift, Vector state_scale, Vector input_shift, Vector input_scale)
    : state_shift_(std::move(state_shift)), state_scale_(std::move(state_scale)),
      input_shift_(std::move(input_shift)), input_scale_(std::move(input_scale))
{
    if (state_shift_.size() != state_scale_.size() || input_shift_.size() != input_scale_.size()) {
        throw InputError("normalizer shift/scale sizes differ");
    }
    if ((state_scale_.array() <= 0.0).any() || (input_scale_.array() <= 0.0).any()) {
        throw InputError("normalizer scales must be positive");
    }
}

Normalizer Normalizer::fit_max_abs(const SnapshotDataset& ds)
{
    ds.validate();
    Vector sx = ds.X.cwiseAbs().colwise().maxCoeff().cwiseMax(ds.X_plus.cwiseAbs().colwise().maxCoeff());
    Vector su = ds.U.cwiseAbs().colwise().maxCoeff();
    // Constant-zero columns keep unit scale.
    for (Index i = 0; i < sx.size(); ++i) if (!(sx[i] > 0.0)) sx[i] = 1.0;
    for (Index i = 0; i < su.size(); ++i) if (!(su[i] > 0.0)) su[i] = 1.0;
    return Normalizer(Vector::Zero(sx.size()), sx, Vector::Zero(su.size()), su);
}

namespace {

Matrix apply_columns(const Matrix& M, const Vector& shift, const Vector& scale)
{
    if (M.cols() != shift.size()) throw InputError("normalizer dimension mismatch");
    return (M.rowwise() - shift.transpose()).array().rowwise() / scale.transpose().array();
}

Matrix invert_columns(const Matrix& M, const Vector& shift, const Vector& scale)
{
    if (M.cols() != shift.size()) throw InputError("normalizer dimension mismatch");
    Matrix out = M.array().rowwise() * scale.transpose().array();
    return out.rowwise() + shift.transpose();
}

}  // namespace

SnapshotDataset Normalizer::apply(const SnapshotDataset& ds) const
{
    return SnapshotDataset(apply_columns(ds.X, state_shift_, state_scale_),
                           apply_columns(ds.U, input_shift_, input_scale_),
                           apply_columns(ds.X_plus, state_shift_, state_scale_), ds.segments);
}

SnapshotDataset Normalizer::invert(const SnapshotDataset& ds) const
{
    return SnapshotDataset(invert_columns(ds.X, state_shift_, state_scale_),
                           invert_columns(ds.U, input_shift_, input_scale_),
                           invert_columns(ds.X_plus, state_shift_, state_scale_), ds.segments);
}

Vector Normalizer::apply_state(const Vector& x) const
{
    return (x - state_shift_).cwiseQuotient(state_scale_);
}
Vector Normalizer::invert_state(const Vector& x) const { return x.cwiseProduct(state_scale_) + state_shift_; }
Vector Normalizer::apply_input(const Vector& u) const
{
    return (u - input_shift_).cwiseQuotient(input_scale_);
}
Vector Normalizer::invert_input(const Vector& u) const { return u.cwiseProduct(input_scale_) + input_shift_; }

// ---------------------------------------------------------------- CSV

std::string format_double(double value)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    if (res.ec != std::errc{}) throw InputError("failed to format number");
    return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& field, std::size_t line, const std::string& column)
{
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (field.empty() || res.ec != std::errc{} || res.ptr != last) {
        throw ParseError("non-numeric value '" + field + "' in column " + column, line);
    }
    return v;
}

struct ColumnLayout {
    std::vector<int> x, u, xp;  // column index per coordinate
    int traj = -1;
};

// Returns the 1-based coordinate for names like "x_3" with the given prefix, or 0.
int coordinate_of(const std::string& name, const std::string& prefix)
{
    if (name.rfind(prefix, 0) != 0) return 0;
    const std::string digits = name.substr(prefix.size());
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos || digits[0] == '0') return 0;
    return std::stoi(digits);
}

ColumnLayout parse_header(const std::vector<std::string>& names, std::size_t line, std::optional<CsvDims> expected)
{
    std::map<std::string, int> seen;
    std::map<int, int> x, u, xp;
    ColumnLayout layout;
    for (std::size_t c = 0; c < names.size(); ++c) {
        const std::string& name = names[c];
        if (!seen.emplace(name, static_cast<int>(c)).second) throw ParseError("duplicate column '" + name + "'", line);
        if (name == "traj_id") {
            layout.traj = static_cast<int>(c);
        } else if (int k = coordinate_of(name, "xp_")) {
            xp[k] = static_cast<int>(c);
        } else if (int k = coordinate_of(name, "x_")) {
            x[k] = static_cast<int>(c);
        } else if (int k = coordinate_of(name, "u_")) {
            u[k] = static_cast<int>(c);
        } else {
            throw ParseError("unknown column '" + name + "'", line);
        }
    }
    const int nx = expected ? static_cast<int>(expected->state_dim)
                            : std::max(x.empty() ? 0 : x.rbegin()->first, xp.empty() ? 0 : xp.rbegin()->first);
    const int nu = expected ? static_cast<int>(expected->input_dim) : (u.empty() ? 0 : u.rbegin()->first);
    if (nx < 1) throw ParseError("missing column 'x_1'", line);
    auto collect = [&](const std::map<int, int>& cols, const std::string& prefix, int count) {
        std::vector<int> idx;
        for (int k = 1; k <= count; ++k) {
            auto it = cols.find(k);
            if (it == cols.end()) throw ParseError("missing column '" + prefix + std::to_string(k) + "'", line);
            idx.push_back(it->second);
        }
        if (!cols.empty() && cols.rbegin()->first > count) {
            throw ParseError("unexpected column '" + prefix + std::to_string(cols.rbegin()->first) + "'", line);
        }
        return idx;
    };
    layout.x = collect(x, "x_", nx);
    layout.u = collect(u, "u_", nu);
    layout.xp = collect(xp, "xp_", nx);
    return layout;
}

}  // namespace

SnapshotDataset parse_csv(const std::string& text, std::optional<CsvDims> expected)
{
    std::istringstream is(text);
    std::string line;
    std::size_t line_no = 0;
    std::optional<ColumnLayout> layout;
    std::size_t width = 0;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> traj_ids;
    std::vector<std::string> names;

    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        auto fields = split_fields(line);
        if (!layout) {
            names = fields;
            layout = parse_header(fields, line_no, expected);
            width = fields.size();
            continue;
        }
        if (fields.size() != width) {
            throw ParseError("expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()),
                             line_no);
        }
        std::vector<double> row;
        row.reserve(width);
        for (std::size_t c = 0; c < width; ++c) {
            if (static_cast<int>(c) == layout->traj) {
                row.push_back(0.0);
                continue;
            }
            row.push_back(parse_number(fields[c], line_no, names[c]));
        }
        if (layout->traj >= 0) {
            const std::string& id = fields[static_cast<std::size_t>(layout->traj)];
            if (id.empty()) throw ParseError("empty traj_id", line_no);
            traj_ids.push_back(id);
        }
        rows.push_back(std::move(row));
    }
    if (!layout) throw ParseError("missing header", 0);
    if (rows.empty()) throw ParseError("no data rows", line_no);

    const auto n = static_cast<Index>(rows.size());
    const auto nx = static_cast<Index>(layout->x.size());
    const auto nu = static_cast<Index>(layout->u.size());
    Matrix X(n, nx), U(n, nu), Xp(n, nx);
    for (Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        for (Index k = 0; k < nx; ++k) {
            X(i, k) = r[static_cast<std::size_t>(layout->x[static_cast<std::size_t>(k)])];
            Xp(i, k) = r[static_cast<std::size_t>(layout->xp[static_cast<std::size_t>(k)])];
        }
        for (Index k = 0; k < nu; ++k) U(i, k) = r[static_cast<std::size_t>(layout->u[static_cast<std::size_t>(k)])];
    }
    std::vector<std::size_t> segments;
    for (std::size_t i = 0; i < traj_ids.size(); ++i) {
        if (i == 0 || traj_ids[i] != traj_ids[i - 1]) segments.push_back(0);
        ++segments.back();
    }
    return SnapshotDataset(std::move(X), std::move(U), std::move(Xp), std::move(segments));
}

SnapshotDataset load_csv(const std::filesystem::path& path, std::optional<CsvDims> expected)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "'", 0);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), expected);
}

std::string format_csv(const SnapshotDataset& ds)
{
    ds.validate();
    std::string out;
    const Index nx = ds.state_dim();
    const Index nu = ds.input_dim();
    for (Index k = 1; k <= nx; ++k) out += (k > 1 ? ",x_" : "x_") + std::to_string(k);
    for (Index k = 1; k <= nu; ++k) out += ",u_" + std::to_string(k);
    for (Index k = 1; k <= nx; ++k) out += ",xp_" + std::to_string(k);
    const bool with_traj = !ds.segments.empty();
    if (with_traj) out += ",traj_id";
    out += '\n';

    std::size_t seg = 0;
    std::size_t left = with_traj ? ds.segments[0] : 0;
    for (Index i = 0; i < ds.size(); ++i) {
        for (Index k = 0; k < nx; ++k) {
            if (k > 0) out += ',';
            out += format_double(ds.X(i, k));
        }
        for (Index k = 0; k < nu; ++k) out += ',' + format_double(ds.U(i, k));
        for (Index k = 0; k < nx; ++k) out += ',' + format_double(ds.X_plus(i, k));
        if (with_traj) {
            if (left == 0) left = ds.segments[++seg];
            out += ',' + std::to_string(seg);
            --left;
        }
        out += '\n';
    }
    return out;
}

void write_csv(const std::filesystem::path& path, const SnapshotDataset& ds)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out << format_csv(ds);
}

// ---------------------------------------------------------------- metrics

double rmse(const Eigen::Ref<const Matrix>& Y, const Eigen::Ref<const Matrix>& Y_hat)
{
    if (Y.rows() != Y_hat.rows() || Y.cols() != Y_hat.cols()) throw InputError("rmse: shape mismatch");
    if (Y.rows() < 1) throw InputError("rmse: empty sequence");
    return std::sqrt((Y - Y_hat).squaredNorm() / static_cast<double>(Y.rows()));
}

double nrmse(const Eigen::Ref<const Matrix>& Y, const Eigen::Ref<const Matrix>& Y_hat)
{
    const double err = rmse(Y, Y_hat);
    const Matrix centred = Y.rowwise() - Y.colwise().mean();
    const double ref = std::sqrt(centred.squaredNorm() / static_cast<double>(Y.rows()));
    if (!(ref > 0.0)) throw InputError("nrmse: reference has zero variance");
    return err / ref;
}

}  // namespace ckor
