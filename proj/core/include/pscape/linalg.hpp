#pragma once

#include <Eigen/Dense>

namespace pscape {

// Row-major so that a matrix's storage is its row-by-row flattening; reshape
// in the gradient engine and the feature layouts rely on this.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

} // namespace pscape
