#pragma once

#include <Eigen/Core>

namespace largegt {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;

using RowMatrixF = RowMatrix<float>;
using RowMatrixD = RowMatrix<double>;

}  // namespace largegt
