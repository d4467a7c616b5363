#pragma once

#include <cmath>
#include <random>

#include "plasticity/nn/tensor.hpp"

namespace plasticity::nn {

/// Numerically stable row-wise log-softmax.
template <typename Scalar>
Tensor<Scalar> log_softmax(const Tensor<Scalar>& logits) {
  const ColVector<Scalar> mx = logits.rowwise().maxCoeff();
  Tensor<Scalar> shifted = logits.colwise() - mx;
  const ColVector<Scalar> lse = shifted.array().exp().rowwise().sum().log();
  shifted.colwise() -= lse;
  return shifted;
}

/// Entropy of each row's categorical distribution, given its log-probabilities.
template <typename Scalar>
ColVector<Scalar> categorical_entropy(const Tensor<Scalar>& log_probs) {
  return -(log_probs.array().exp() * log_probs.array()).rowwise().sum();
}

/// Inverse-CDF draw from exp(log_probs); one uniform per call.
template <typename Scalar, typename Derived>
int sample_categorical(const Eigen::DenseBase<Derived>& log_probs_row, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(rng);
  double acc = 0.0;
  const Index n = log_probs_row.size();
  for (Index i = 0; i < n; ++i) {
    acc += std::exp(static_cast<double>(log_probs_row(i)));
    if (x < acc) return static_cast<int>(i);
  }
  return static_cast<int>(n - 1);
}

}  // namespace plasticity::nn
