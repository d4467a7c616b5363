#include "plasticity/ppo/rollout_buffer.hpp"

#include <cmath>
#include <numeric>

namespace plasticity::ppo {

RolloutBuffer::RolloutBuffer(int capacity, int n_envs, Index obs_dim)
    : capacity_(capacity), n_envs_(n_envs), obs_(capacity, obs_dim) {
  if (capacity < 1 || n_envs < 1 || capacity % n_envs != 0) {
    throw UsageError("rollout buffer: capacity must be a positive multiple of n_envs");
  }
  actions_.reserve(capacity);
  log_probs_.reserve(capacity);
  rewards_.reserve(capacity);
  values_.reserve(capacity);
  dones_.reserve(capacity);
}

void RolloutBuffer::add(std::span<const Real> obs, int action, double log_prob, double reward, double value,
                        bool done) {
  if (full()) throw UsageError("rollout buffer: add on a full buffer");
  if (static_cast<Index>(obs.size()) != obs_.cols()) throw DimensionError("rollout buffer: observation width");
  std::copy(obs.begin(), obs.end(), obs_.row(size_).data());
  actions_.push_back(action);
  log_probs_.push_back(log_prob);
  rewards_.push_back(reward);
  values_.push_back(value);
  dones_.push_back(done ? 1 : 0);
  ++size_;
}

void RolloutBuffer::add(const Transition& t) {
  add(std::span<const Real>(t.obs.data(), static_cast<std::size_t>(t.obs.size())), t.action, t.log_prob_old,
      t.reward, t.value_old, t.done);
}

void RolloutBuffer::clear() {
  size_ = 0;
  actions_.clear();
  log_probs_.clear();
  rewards_.clear();
  values_.clear();
  dones_.clear();
  advantages_.clear();
  returns_.clear();
}

void RolloutBuffer::compute_advantages(std::span<const double> bootstrap, double gamma, double lambda) {
  if (!full()) throw UsageError("rollout buffer: advantages are computed only on a full buffer");
  GaeResult g = compute_gae(rewards_, values_, dones_, bootstrap, n_envs_, gamma, lambda);
  advantages_ = std::move(g.advantages);
  returns_ = std::move(g.returns);
}

void RolloutBuffer::normalize_advantages() {
  if (advantages_.empty()) throw UsageError("rollout buffer: no advantages to normalize");
  const double n = static_cast<double>(advantages_.size());
  const double mean = std::accumulate(advantages_.begin(), advantages_.end(), 0.0) / n;
  double var = 0.0;
  for (double a : advantages_) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / n);
  for (double& a : advantages_) a = (a - mean) / (sd + 1e-8);
}

Transition RolloutBuffer::transition(int i) const {
  if (i < 0 || i >= size_) throw UsageError("rollout buffer: index out of range");
  return {obs_.row(i), actions_[i], log_probs_[i], rewards_[i], values_[i], dones_[i] != 0};
}

}  // namespace plasticity::ppo
