#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "plasticity/nn/tensor.hpp"
#include "plasticity/ppo/gae.hpp"

namespace plasticity::ppo {

struct Transition {
  nn::RowVector<Real> obs;
  int action = 0;
  double log_prob_old = 0.0;  // <= 0
  double reward = 0.0;
  double value_old = 0.0;
  bool done = false;
};

/// Fixed-capacity, time-major store of transitions from `n_envs` rollout slots. Slot e's
/// transition at step t lives at row t * n_envs + e.
class RolloutBuffer {
 public:
  RolloutBuffer(int capacity, int n_envs, Index obs_dim);

  void add(std::span<const Real> obs, int action, double log_prob, double reward, double value, bool done);
  void add(const Transition& t);

  bool full() const { return size_ == capacity_; }
  int size() const { return size_; }
  int capacity() const { return capacity_; }
  int n_envs() const { return n_envs_; }
  void clear();

  /// Fills advantages and returns. Requires a full buffer.
  void compute_advantages(std::span<const double> bootstrap, double gamma, double lambda);

  /// Rescales advantages to zero mean and unit standard deviation.
  void normalize_advantages();

  Transition transition(int i) const;

  const nn::Tensor<Real>& observations() const { return obs_; }
  const std::vector<int>& actions() const { return actions_; }
  const std::vector<double>& log_probs() const { return log_probs_; }
  const std::vector<double>& rewards() const { return rewards_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<std::uint8_t>& dones() const { return dones_; }
  const std::vector<double>& advantages() const { return advantages_; }
  const std::vector<double>& returns() const { return returns_; }

 private:
  int capacity_;
  int n_envs_;
  int size_ = 0;
  nn::Tensor<Real> obs_;
  std::vector<int> actions_;
  std::vector<double> log_probs_;
  std::vector<double> rewards_;
  std::vector<double> values_;
  std::vector<std::uint8_t> dones_;
  std::vector<double> advantages_;
  std::vector<double> returns_;
};

}  // namespace plasticity::ppo
