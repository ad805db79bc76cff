#pragma once

#include <cmath>

#include "ckor/rng.hpp"
#include "ckor/types.hpp"

namespace ckor::test {

inline Matrix uniform_matrix(Rng& rng, Index rows, Index cols, double lo = -1.0, double hi = 1.0)
{
    Matrix M(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) M(i, j) = rng.uniform(lo, hi);
    }
    return M;
}

inline Matrix random_psd(Rng& rng, Index n, Index rank)
{
    const Matrix F = uniform_matrix(rng, n, rank);
    return F * F.transpose();
}

inline double max_abs(const Matrix& M) { return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff(); }

inline double rel_err(const Matrix& got, const Matrix& want)
{
    return max_abs(got - want) / std::max(1e-300, max_abs(want));
}

}  // namespace ckor::test
