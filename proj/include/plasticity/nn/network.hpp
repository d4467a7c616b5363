#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "plasticity/nn/parameter_store.hpp"
#include "plasticity/nn/tensor.hpp"

namespace plasticity::nn {

enum class Activation { Relu, Crelu };

inline constexpr double kLayerNormEpsilon = 1e-5;

/// Shape of the dual-head MLP: shared hidden stack, one policy-logit head, one scalar value head.
struct NetworkSpec {
  Index input_dim = 484;
  std::vector<Index> hidden_dims{256, 256};
  Activation activation = Activation::Relu;
  bool use_layer_norm = false;
  Index n_actions = 4;
  static constexpr bool dual_head = true;

  /// Output width of hidden layer i's affine map. CReLU doubles the width again, so the
  /// affine part is half as wide as the ReLU counterpart.
  Index affine_width(std::size_t i) const {
    return activation == Activation::Crelu ? hidden_dims[i] / 2 : hidden_dims[i];
  }

  Index layer_input_width(std::size_t i) const { return i == 0 ? input_dim : hidden_dims[i - 1]; }

  Index head_input_width() const { return hidden_dims.empty() ? input_dim : hidden_dims.back(); }

  void validate() const {
    if (input_dim < 1) throw DimensionError("network input_dim must be >= 1");
    if (n_actions < 1) throw DimensionError("network n_actions must be >= 1");
    for (Index h : hidden_dims) {
      if (h < 1) throw DimensionError("hidden layer width must be >= 1");
      if (activation == Activation::Crelu && h % 2 != 0) {
        throw DimensionError("CReLU hidden widths must be even, got " + std::to_string(h));
      }
    }
  }

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

inline std::string hidden_name(std::size_t i) { return "hidden" + std::to_string(i); }

inline constexpr std::array<std::string_view, 2> kHeadNames{"policy", "value"};

inline bool is_head_parameter(std::string_view name) {
  for (auto h : kHeadNames) {
    if (name.substr(0, h.size()) == h && name.size() > h.size() && name[h.size()] == '.') return true;
  }
  return false;
}

/// Intermediates of one hidden layer, kept for backward and for activation diagnostics.
template <typename Scalar>
struct HiddenTrace {
  Tensor<Scalar> input;       // [B, in]
  Tensor<Scalar> normalized;  // LayerNorm x-hat, [B, affine]; empty without LayerNorm
  ColVector<Scalar> inv_std;  // LayerNorm 1/sqrt(var + eps) per row
  Tensor<Scalar> act_input;   // value the nonlinearity sees, [B, affine]
  Tensor<Scalar> post;        // post-activation, [B, width]
};

template <typename Scalar>
struct ActivationTrace {
  std::vector<HiddenTrace<Scalar>> layers;
  Tensor<Scalar> head_input;
  bool recorded = false;
};

template <typename Scalar>
struct ForwardResult {
  Tensor<Scalar> logits;  // [B, n_actions]
  Tensor<Scalar> values;  // [B, 1]
  ActivationTrace<Scalar> trace;
};

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& x) {
  return x.cwiseMax(Scalar(0));
}

/// concat(relu(x), relu(-x)) along features.
template <typename Scalar>
Tensor<Scalar> crelu(const Tensor<Scalar>& x) {
  Tensor<Scalar> out(x.rows(), 2 * x.cols());
  out.leftCols(x.cols()) = x.cwiseMax(Scalar(0));
  out.rightCols(x.cols()) = (-x).cwiseMax(Scalar(0));
  return out;
}

namespace detail {

template <typename Scalar>
Tensor<Scalar> layer_norm_impl(const Tensor<Scalar>& x, const Tensor<Scalar>& gain,
                               const Tensor<Scalar>& bias, Scalar eps, Tensor<Scalar>* normalized,
                               ColVector<Scalar>* inv_std) {
  const Index d = x.cols();
  if (d == 0) throw DimensionError("layer_norm: feature dimension must be >= 1");
  require_shape(gain, 1, d, "layer_norm gain");
  require_shape(bias, 1, d, "layer_norm bias");
  const ColVector<Scalar> mean = x.rowwise().mean();
  Tensor<Scalar> centered = x.colwise() - mean;
  const ColVector<Scalar> var = centered.array().square().rowwise().mean();
  const ColVector<Scalar> inv = (var.array() + eps).rsqrt();
  Tensor<Scalar> xhat = centered.array().colwise() * inv.array();
  Tensor<Scalar> out = (xhat.array().rowwise() * gain.row(0).array()).rowwise() + bias.row(0).array();
  if (normalized) *normalized = std::move(xhat);
  if (inv_std) *inv_std = inv;
  return out;
}

template <typename Scalar>
Tensor<Scalar> affine(const Tensor<Scalar>& x, const Tensor<Scalar>& w, const Tensor<Scalar>& b) {
  Tensor<Scalar> y = x * w;
  y.rowwise() += b.row(0);
  return y;
}

template <typename Scalar>
Tensor<Scalar> head_forward(const ParameterStore<Scalar>& params, const std::string& prefix,
                            const Tensor<Scalar>& h) {
  Tensor<Scalar> y = affine(h, params.value(prefix + ".weight"), params.value(prefix + ".bias"));
  const std::string a = prefix + ".inject_a";
  if (params.contains(a + ".weight")) {
    const std::string b = prefix + ".inject_b";
    // (a - b) is formed first so that a == b contributes an exact zero.
    const Tensor<Scalar> correction =
        affine(h, params.value(a + ".weight"), params.value(a + ".bias")) -
        affine(h, params.value(b + ".weight"), params.value(b + ".bias"));
    y += correction;
  }
  return y;
}

template <typename Scalar>
void check_parameters(const NetworkSpec& spec, const ParameterStore<Scalar>& params) {
  for (std::size_t i = 0; i < spec.hidden_dims.size(); ++i) {
    const std::string n = hidden_name(i);
    const Index in = spec.layer_input_width(i);
    const Index out = spec.affine_width(i);
    require_shape(params.value(n + ".weight"), in, out, n + ".weight");
    require_shape(params.value(n + ".bias"), 1, out, n + ".bias");
    if (spec.use_layer_norm) {
      require_shape(params.value(n + ".ln_gain"), 1, out, n + ".ln_gain");
      require_shape(params.value(n + ".ln_bias"), 1, out, n + ".ln_bias");
    }
  }
  const Index h = spec.head_input_width();
  require_shape(params.value("policy.weight"), h, spec.n_actions, "policy.weight");
  require_shape(params.value("value.weight"), h, 1, "value.weight");
}

}  // namespace detail

/// Row-wise layer normalization with gain and bias.
template <typename Scalar>
Tensor<Scalar> layer_norm(const Tensor<Scalar>& x, const Tensor<Scalar>& gain, const Tensor<Scalar>& bias,
                          Scalar eps = Scalar(kLayerNormEpsilon)) {
  return detail::layer_norm_impl<Scalar>(x, gain, bias, eps, nullptr, nullptr);
}

/// Draws a fresh parameter set for `spec`.
template <typename Scalar>
ParameterStore<Scalar> init_parameters(const NetworkSpec& spec, Rng& rng) {
  spec.validate();
  ParameterStore<Scalar> params;
  for (std::size_t i = 0; i < spec.hidden_dims.size(); ++i) {
    const std::string n = hidden_name(i);
    const Index in = spec.layer_input_width(i);
    const Index out = spec.affine_width(i);
    params.add(n + ".weight", in, out, he_uniform(in), rng);
    params.add(n + ".bias", 1, out, fan_in_uniform(in), rng);
    if (spec.use_layer_norm) {
      params.add(n + ".ln_gain", 1, out, constant_init(1.0), rng);
      params.add(n + ".ln_bias", 1, out, constant_init(0.0), rng);
    }
  }
  const Index h = spec.head_input_width();
  params.add("policy.weight", h, spec.n_actions, fan_in_uniform(h), rng);
  params.add("policy.bias", 1, spec.n_actions, fan_in_uniform(h), rng);
  params.add("value.weight", h, 1, fan_in_uniform(h), rng);
  params.add("value.bias", 1, 1, fan_in_uniform(h), rng);
  return params;
}

/// Forward pass over a batch of observations [B, input_dim].
template <typename Scalar>
ForwardResult<Scalar> forward(const NetworkSpec& spec, const ParameterStore<Scalar>& params,
                              const Tensor<Scalar>& obs, bool record_trace = true) {
  if (obs.cols() != spec.input_dim) {
    throw DimensionError("forward: observation batch has " + std::to_string(obs.cols()) +
                         " features, network expects " + std::to_string(spec.input_dim));
  }
  detail::check_parameters(spec, params);

  ForwardResult<Scalar> result;
  Tensor<Scalar> x = obs;
  for (std::size_t i = 0; i < spec.hidden_dims.size(); ++i) {
    const std::string n = hidden_name(i);
    HiddenTrace<Scalar> t;
    Tensor<Scalar> z = detail::affine(x, params.value(n + ".weight"), params.value(n + ".bias"));
    if (spec.use_layer_norm) {
      z = detail::layer_norm_impl<Scalar>(z, params.value(n + ".ln_gain"), params.value(n + ".ln_bias"),
                                          Scalar(kLayerNormEpsilon), &t.normalized, &t.inv_std);
    }
    Tensor<Scalar> post = spec.activation == Activation::Crelu ? crelu(z) : relu(z);
    if (record_trace) {
      t.input = std::move(x);
      t.act_input = std::move(z);
      t.post = post;
      result.trace.layers.push_back(std::move(t));
    }
    x = std::move(post);
  }
  result.logits = detail::head_forward(params, "policy", x);
  result.values = detail::head_forward(params, "value", x);
  if (record_trace) {
    result.trace.head_input = std::move(x);
    result.trace.recorded = true;
  }
  return result;
}

/// Reverse pass. `dlogits` and `dvalues` are dLoss/dlogits and dLoss/dvalues.
/// Frozen parameters (plasticity-injection old weights and the stop-gradient copy) receive
/// exact-zero gradients.
template <typename Scalar>
Gradients<Scalar> backward(const NetworkSpec& spec, const ParameterStore<Scalar>& params,
                           const ForwardResult<Scalar>& fwd, const Tensor<Scalar>& dlogits,
                           const Tensor<Scalar>& dvalues) {
  if (!fwd.trace.recorded) throw UsageError("backward called without a recorded forward pass");
  const Tensor<Scalar>& h = fwd.trace.head_input;
  const Index batch = h.rows();
  require_shape(dlogits, batch, spec.n_actions, "backward dlogits");
  require_shape(dvalues, batch, 1, "backward dvalues");

  Gradients<Scalar> grads;
  for (const auto& e : params.entries()) {
    if (!e.trainable) grads[e.name] = Tensor<Scalar>::Zero(e.current.rows(), e.current.cols());
  }

  Tensor<Scalar> dh = Tensor<Scalar>::Zero(batch, h.cols());
  auto head_backward = [&](const std::string& prefix, const Tensor<Scalar>& dy) {
    const auto& base = params.at(prefix + ".weight");
    if (base.trainable) {
      grads[prefix + ".weight"] = h.transpose() * dy;
      grads[prefix + ".bias"] = dy.colwise().sum();
    }
    dh.noalias() += dy * base.current.transpose();
    const std::string a = prefix + ".inject_a";
    if (params.contains(a + ".weight")) {
      grads[a + ".weight"] = h.transpose() * dy;
      grads[a + ".bias"] = dy.colwise().sum();
      dh.noalias() += dy * params.value(a + ".weight").transpose();
      // The stop-gradient freezes inject_b's parameters only; the encoder still sees -b(h).
      dh.noalias() -= dy * params.value(prefix + ".inject_b.weight").transpose();
    }
  };
  head_backward("policy", dlogits);
  head_backward("value", dvalues);

  Tensor<Scalar> dpost = std::move(dh);
  for (std::size_t ii = spec.hidden_dims.size(); ii-- > 0;) {
    const std::string n = hidden_name(ii);
    const HiddenTrace<Scalar>& t = fwd.trace.layers[ii];
    const Index m = t.act_input.cols();
    Tensor<Scalar> dz;
    if (spec.activation == Activation::Crelu) {
      dz = (dpost.leftCols(m).array() * (t.act_input.array() > Scalar(0)).template cast<Scalar>()) -
           (dpost.rightCols(m).array() * (t.act_input.array() < Scalar(0)).template cast<Scalar>());
    } else {
      dz = dpost.array() * (t.act_input.array() > Scalar(0)).template cast<Scalar>();
    }
    if (spec.use_layer_norm) {
      const Tensor<Scalar>& xhat = t.normalized;
      grads[n + ".ln_gain"] = (dz.array() * xhat.array()).colwise().sum();
      grads[n + ".ln_bias"] = dz.colwise().sum();
      const Tensor<Scalar> dxhat = dz.array().rowwise() * params.value(n + ".ln_gain").row(0).array();
      const ColVector<Scalar> sum_d = dxhat.rowwise().sum();
      const ColVector<Scalar> sum_dx = (dxhat.array() * xhat.array()).rowwise().sum();
      const Scalar d = static_cast<Scalar>(m);
      Tensor<Scalar> inner = (d * dxhat.array()).colwise() - sum_d.array();
      inner.array() -= xhat.array().colwise() * sum_dx.array();
      dz = inner.array().colwise() * (t.inv_std.array() / d);
    }
    const Tensor<Scalar>& w = params.value(n + ".weight");
    grads[n + ".weight"] = t.input.transpose() * dz;
    grads[n + ".bias"] = dz.colwise().sum();
    if (ii > 0) dpost = dz * w.transpose();
  }
  return grads;
}

}  // namespace plasticity::nn
