#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "plasticity/nn/parameter_store.hpp"

namespace plasticity::nn {

struct AdamOptions {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct AdamMoments {
  Tensor<Scalar> first;
  Tensor<Scalar> second;
};

/// Moment estimates are created lazily (zero) the first time a parameter is stepped, so
/// parameters added mid-run (plasticity injection) start from a clean state.
template <typename Scalar>
struct AdamState {
  AdamOptions options;
  std::map<std::string, AdamMoments<Scalar>> moments;
  std::int64_t step = 0;

  void reset() {
    moments.clear();
    step = 0;
  }

  /// Zeroes moments of one parameter, or only the entries where `mask` is nonzero.
  void zero_moments(const std::string& name) { moments.erase(name); }

  template <typename Mask>
  void zero_moments(const std::string& name, const Mask& mask) {
    auto it = moments.find(name);
    if (it == moments.end()) return;
    it->second.first = (mask.array() != 0).select(Scalar(0), it->second.first);
    it->second.second = (mask.array() != 0).select(Scalar(0), it->second.second);
  }
};

/// One bias-corrected Adam update of every trainable parameter.
template <typename Scalar>
void adam_step(ParameterStore<Scalar>& params, const Gradients<Scalar>& grads, AdamState<Scalar>& state) {
  std::string missing;
  for (const auto& e : params.entries()) {
    if (e.trainable && grads.find(e.name) == grads.end()) {
      missing += (missing.empty() ? "" : ", ") + e.name;
    }
  }
  if (!missing.empty()) throw UsageError("adam_step: missing gradient for parameter(s): " + missing);

  state.step += 1;
  const AdamOptions& o = state.options;
  const Scalar b1 = static_cast<Scalar>(o.beta1);
  const Scalar b2 = static_cast<Scalar>(o.beta2);
  const Scalar correction1 = Scalar(1) - static_cast<Scalar>(std::pow(o.beta1, state.step));
  const Scalar correction2 = Scalar(1) - static_cast<Scalar>(std::pow(o.beta2, state.step));
  const Scalar lr = static_cast<Scalar>(o.learning_rate);
  const Scalar eps = static_cast<Scalar>(o.epsilon);

  for (auto& e : params.entries()) {
    if (!e.trainable) continue;
    const Tensor<Scalar>& g = grads.at(e.name);
    require_shape(g, e.current.rows(), e.current.cols(), "gradient of " + e.name);
    auto [it, inserted] = state.moments.try_emplace(e.name);
    AdamMoments<Scalar>& mo = it->second;
    if (inserted || mo.first.rows() != g.rows() || mo.first.cols() != g.cols()) {
      mo.first = Tensor<Scalar>::Zero(g.rows(), g.cols());
      mo.second = Tensor<Scalar>::Zero(g.rows(), g.cols());
    }
    mo.first = b1 * mo.first + (Scalar(1) - b1) * g;
    mo.second = b2 * mo.second + (Scalar(1) - b2) * g.cwiseProduct(g);
    e.current.array() -= lr * (mo.first.array() / correction1) /
                         ((mo.second.array() / correction2).sqrt() + eps);
  }
}

}  // namespace plasticity::nn
