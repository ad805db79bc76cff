#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ckor/types.hpp"

namespace ckor {

/// Snapshot triples (x_i, u_i, x_i^+) stacked row-wise.
///
/// `segments` optionally records trajectory boundaries: consecutive row
/// counts summing to n. Empty means "no trajectory structure known".
struct SnapshotDataset {
    Matrix X;
    Matrix U;
    Matrix X_plus;
    std::vector<std::size_t> segments;

    SnapshotDataset() = default;
    SnapshotDataset(Matrix x, Matrix u, Matrix x_plus, std::vector<std::size_t> segs = {});

    Index size() const noexcept { return X.rows(); }
    Index state_dim() const noexcept { return X.cols(); }
    Index input_dim() const noexcept { return U.cols(); }

    /// Throws InputError when the invariants do not hold.
    void validate() const;

    /// Row offsets of every segment start (size = segments.size()).
    std::vector<std::size_t> segment_offsets() const;
};

/// Concatenate datasets with equal dimensions; segments are carried over.
SnapshotDataset concat(std::span<const SnapshotDataset> parts);

/// Rows at `indices` (in that order). Segment structure is dropped.
SnapshotDataset select_rows(const SnapshotDataset& ds, std::span<const std::size_t> indices);

/// Segments [first, first + count) as a new dataset.
SnapshotDataset select_segments(const SnapshotDataset& ds, std::size_t first, std::size_t count);

struct DatasetSplit {
    SnapshotDataset train;
    SnapshotDataset validation;
    SnapshotDataset test;
};

/// Trajectory-level split: the first `train` segments, then `validation`, then the rest.
DatasetSplit split_by_segments(const SnapshotDataset& ds, std::size_t train, std::size_t validation);

/// Inducing (Nystrom) points: a subset of rows of a parent dataset.
struct InducingSet {
    std::vector<std::size_t> indices;
    Matrix X;
    Matrix U;
    Matrix X_plus;

    Index size() const noexcept { return X.rows(); }
};

/// Inducing set from explicit row indices (distinct, in range).
InducingSet make_inducing(const SnapshotDataset& ds, std::vector<std::size_t> indices);

/// m rows drawn uniformly without replacement using Rng(seed).
InducingSet subsample_uniform(const SnapshotDataset& ds, std::size_t m, std::uint64_t seed);

/// Per-column affine map v -> (v - shift) / scale for states and inputs.
/// States and successor states share the state columns.
class Normalizer {
public:
    Normalizer() = default;
    Normalizer(Vector state_shift, Vector state_scale, Vector input_shift, Vector input_scale);

    /// Max-abs scaling (zero shift): every fitted column ends up in [-1, 1].
    static Normalizer fit_max_abs(const SnapshotDataset& ds);

    SnapshotDataset apply(const SnapshotDataset& ds) const;
    SnapshotDataset invert(const SnapshotDataset& ds) const;

    Vector apply_state(const Vector& x) const;
    Vector invert_state(const Vector& x) const;
    Vector apply_input(const Vector& u) const;
    Vector invert_input(const Vector& u) const;

    const Vector& state_shift() const noexcept { return state_shift_; }
    const Vector& state_scale() const noexcept { return state_scale_; }
    const Vector& input_shift() const noexcept { return input_shift_; }
    const Vector& input_scale() const noexcept { return input_scale_; }

private:
    Vector state_shift_, state_scale_, input_shift_, input_scale_;
};

struct CsvDims {
    Index state_dim;
    Index input_dim;
};

/// Reads the snapshot CSV schema: x_1..x_nx, u_1..u_nu, xp_1..xp_nx and an
/// optional traj_id column. `#` lines are comments. When `expected` is given
/// the header must declare exactly those dimensions.
SnapshotDataset load_csv(const std::filesystem::path& path, std::optional<CsvDims> expected = std::nullopt);
SnapshotDataset parse_csv(const std::string& text, std::optional<CsvDims> expected = std::nullopt);

/// Writes the same schema; traj_id is emitted when segments are present.
void write_csv(const std::filesystem::path& path, const SnapshotDataset& ds);
std::string format_csv(const SnapshotDataset& ds);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

/// sqrt(1/T * sum_t |y_t - yhat_t|^2).
double rmse(const Eigen::Ref<const Matrix>& Y, const Eigen::Ref<const Matrix>& Y_hat);

/// rmse divided by the RMS of the mean-centred reference.
double nrmse(const Eigen::Ref<const Matrix>& Y, const Eigen::Ref<const Matrix>& Y_hat);

}  // namespace ckor
