#pragma once

#include <Eigen/Dense>

namespace ckor {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace ckor
