// Eigen type shorthands shared by every module.
#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Core>

namespace lkd {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using MatrixXd = Matrix<double>;
using MatrixXf = Matrix<float>;
using MatrixXi = Matrix<std::int64_t>;
using VectorXd = Vector<double>;
using VectorXf = Vector<float>;

using Index = Eigen::Index;

}  // namespace lkd
