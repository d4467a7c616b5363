#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "plasticity/errors.hpp"

namespace plasticity {

using Real = double;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

namespace nn {

/// Row-major dense tensor. Rank <= 2 covers every quantity the networks here need:
/// batches are rows, features are columns, biases are 1 x n.
template <typename Scalar>
using Tensor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

template <typename Scalar>
using ColVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Gradient of a scalar loss, keyed by parameter name.
template <typename Scalar>
using Gradients = std::map<std::string, Tensor<Scalar>>;

inline std::string shape_string(Index rows, Index cols) {
  std::ostringstream os;
  os << "[" << rows << ", " << cols << "]";
  return os.str();
}

template <typename Derived>
std::string shape_string(const Eigen::DenseBase<Derived>& x) {
  return shape_string(x.rows(), x.cols());
}

template <typename Derived>
void require_shape(const Eigen::DenseBase<Derived>& x, Index rows, Index cols, const std::string& what) {
  if (x.rows() != rows || x.cols() != cols) {
    throw DimensionError(what + ": expected shape " + shape_string(rows, cols) + ", got " +
                         shape_string(x));
  }
}

}  // namespace nn
}  // namespace plasticity
