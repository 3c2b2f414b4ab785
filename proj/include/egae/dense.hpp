#pragma once

#include <Eigen/Dense>

namespace egae {

// Row-major to match on-disk layouts and CSR row access patterns.
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace egae
