#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "plasticity/nn/tensor.hpp"

namespace plasticity::nn {

enum class InitFamily { Uniform, Constant };

/// Describes the distribution a parameter tensor is drawn from, so fresh draws can be
/// produced at any time (shrink+perturb, resets, ReDo).
///
/// Uniform: U(-b, b) with b = scale / sqrt(fan_in). Constant: every entry equals `scale`.
struct InitSampler {
  InitFamily family = InitFamily::Uniform;
  Index fan_in = 1;
  double scale = 1.0;

  double bound() const {
    return family == InitFamily::Uniform ? scale / std::sqrt(static_cast<double>(fan_in)) : scale;
  }

  template <typename Scalar>
  Tensor<Scalar> sample(Index rows, Index cols, Rng& rng) const {
    Tensor<Scalar> out(rows, cols);
    if (family == InitFamily::Constant) {
      out.setConstant(static_cast<Scalar>(scale));
      return out;
    }
    const Scalar b = static_cast<Scalar>(bound());
    std::uniform_real_distribution<Scalar> dist(-b, b);
    for (Index i = 0; i < out.size(); ++i) out.data()[i] = dist(rng);
    return out;
  }

  /// Variance of a single draw.
  double variance() const {
    if (family == InitFamily::Constant) return 0.0;
    const double b = bound();
    return b * b / 3.0;
  }

  friend bool operator==(const InitSampler&, const InitSampler&) = default;
};

/// He-style fan-in uniform, U(-sqrt(6/fan_in), sqrt(6/fan_in)), for ReLU layers.
inline InitSampler he_uniform(Index fan_in) { return {InitFamily::Uniform, fan_in, std::sqrt(6.0)}; }

/// U(-gain/sqrt(fan_in), gain/sqrt(fan_in)); biases and output heads.
inline InitSampler fan_in_uniform(Index fan_in, double gain = 1.0) {
  return {InitFamily::Uniform, fan_in, gain};
}

inline InitSampler constant_init(double value) { return {InitFamily::Constant, 1, value}; }

template <typename Scalar>
struct ParameterEntry {
  std::string name;
  Tensor<Scalar> current;
  Tensor<Scalar> init_snapshot;  // draw made when the entry was created; never modified afterwards
  InitSampler sampler;
  bool trainable = true;
};

/// Flat, ordered collection of named parameter tensors. Iteration order is insertion order,
/// which keeps every traversal (optimizer, resets, norms) deterministic.
template <typename Scalar>
class ParameterStore {
 public:
  using Entry = ParameterEntry<Scalar>;

  Entry& add(std::string name, Index rows, Index cols, const InitSampler& sampler, Rng& rng,
             bool trainable = true) {
    if (contains(name)) throw UsageError("parameter '" + name + "' already exists");
    Entry e;
    e.name = std::move(name);
    e.current = sampler.template sample<Scalar>(rows, cols, rng);
    e.init_snapshot = e.current;
    e.sampler = sampler;
    e.trainable = trainable;
    entries_.push_back(std::move(e));
    return entries_.back();
  }

  /// Adds an entry with explicit values (the snapshot is the given value).
  Entry& add_value(std::string name, Tensor<Scalar> value, const InitSampler& sampler,
                   bool trainable = true) {
    if (contains(name)) throw UsageError("parameter '" + name + "' already exists");
    Entry e;
    e.name = std::move(name);
    e.init_snapshot = value;
    e.current = std::move(value);
    e.sampler = sampler;
    e.trainable = trainable;
    entries_.push_back(std::move(e));
    return entries_.back();
  }

  void remove(const std::string& name) {
    auto it = find_it(name);
    if (it == entries_.end()) throw UsageError("no parameter named '" + name + "'");
    entries_.erase(it);
  }

  bool contains(const std::string& name) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const Entry& e) { return e.name == name; });
  }

  Entry& at(const std::string& name) {
    auto it = find_it(name);
    if (it == entries_.end()) throw UsageError("no parameter named '" + name + "'");
    return *it;
  }
  const Entry& at(const std::string& name) const {
    return const_cast<ParameterStore*>(this)->at(name);
  }

  Tensor<Scalar>& value(const std::string& name) { return at(name).current; }
  const Tensor<Scalar>& value(const std::string& name) const { return at(name).current; }

  /// Fresh tensor drawn from the entry's sampler, same shape as the entry.
  Tensor<Scalar> resample(const std::string& name, Rng& rng) const {
    const Entry& e = at(name);
    return e.sampler.template sample<Scalar>(e.current.rows(), e.current.cols(), rng);
  }

  std::span<Entry> entries() { return entries_; }
  std::span<const Entry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  Index parameter_count() const {
    Index n = 0;
    for (const auto& e : entries_) n += e.current.size();
    return n;
  }

  friend bool operator==(const ParameterStore& a, const ParameterStore& b) {
    if (a.entries_.size() != b.entries_.size()) return false;
    for (std::size_t i = 0; i < a.entries_.size(); ++i) {
      const Entry& x = a.entries_[i];
      const Entry& y = b.entries_[i];
      if (x.name != y.name || x.trainable != y.trainable || !(x.sampler == y.sampler)) return false;
      if (x.current.rows() != y.current.rows() || x.current.cols() != y.current.cols()) return false;
      if (!(x.current.array() == y.current.array()).all()) return false;
      if (!(x.init_snapshot.array() == y.init_snapshot.array()).all()) return false;
    }
    return true;
  }

 private:
  typename std::vector<Entry>::iterator find_it(const std::string& name) {
    return std::find_if(entries_.begin(), entries_.end(),
                        [&](const Entry& e) { return e.name == name; });
  }

  std::vector<Entry> entries_;
};

}  // namespace plasticity::nn
