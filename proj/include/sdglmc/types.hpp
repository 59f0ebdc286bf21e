#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace sdglmc {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Index = Eigen::Index;
using SparseMatrix = Eigen::SparseMatrix<double>;

}  // namespace sdglmc
