#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "plasticity/diagnostics/metrics.hpp"
#include "plasticity/env/gridworld.hpp"
#include "plasticity/interventions/interventions.hpp"
#include "plasticity/nn/adam.hpp"
#include "plasticity/nn/network.hpp"
#include "plasticity/ppo/config.hpp"
#include "plasticity/ppo/rollout_buffer.hpp"
#include "plasticity/shift/round_plan.hpp"

namespace plasticity::ppo {

/// Network, parameters and optimizer state of one learner.
struct Agent {
  nn::NetworkSpec spec;
  nn::ParameterStore<Real> params;
  nn::AdamState<Real> adam;
};

Agent make_agent(const nn::NetworkSpec& spec, const PpoConfig& config, Rng& init_rng);

struct TrainerSeeds {
  std::uint64_t rollout = 1;      // action sampling and instance scheduling
  std::uint64_t shuffle = 2;      // minibatch order
  std::uint64_t diagnostics = 3;  // evaluation-batch sampling
};

/// PPO over a round's active instances. Each iteration steps every rollout slot once; a full
/// buffer triggers update_epochs passes of minibatch Adam steps (an "epoch" in the metrics
/// stream), with intervention hooks after each optimizer step and after each epoch.
class PpoTrainer {
 public:
  PpoTrainer(Agent& agent, const PpoConfig& config, interventions::InterventionHooks& hooks, TrainerSeeds seeds,
             int eval_batch_size = 256);

  /// Runs `iterations` iterations on `instances` with observations passed through `map`.
  /// Returns one record per completed epoch. A partial buffer at the end of the round is discarded.
  std::vector<diagnostics::MetricsRecord> train_round(int round, const std::vector<env::GridworldInstance>& instances,
                                                      const shift::PermutationMap& map, long iterations);

  /// Round-boundary hooks between `round` and `round + 1`.
  void end_round(int round);

  /// Called with each epoch's record after the epoch hooks ran (e.g. for periodic test evaluation).
  void set_epoch_callback(std::function<void(diagnostics::MetricsRecord&)> callback) {
    epoch_callback_ = std::move(callback);
  }

  int epochs_completed() const { return epoch_; }
  std::vector<interventions::InterventionEvent> take_events();

  /// Number of epochs a round of `iterations` iterations produces.
  static int epochs_per_round(const PpoConfig& config, long iterations);

 private:
  struct Slot {
    env::GridworldInstance game;
    env::Observation obs;
    double episode_return = 0.0;
  };

  void start_episode(Slot& slot, const std::vector<env::GridworldInstance>& instances);
  void fill_batch(const std::vector<Slot>& slots, const shift::PermutationMap& map, nn::Tensor<Real>& batch) const;
  diagnostics::MetricsRecord update(int round, const std::vector<Slot>& slots, const shift::PermutationMap& map);

  Agent& agent_;
  PpoConfig config_;
  interventions::InterventionHooks& hooks_;
  Rng rollout_rng_;
  Rng shuffle_rng_;
  Rng diag_rng_;
  int eval_batch_size_;
  RolloutBuffer buffer_;
  nn::ParameterStore<Real> previous_;
  int epoch_ = 0;
  double entropy_sum_ = 0.0;
  std::vector<double> epoch_returns_;
  double last_train_reward_ = 0.0;
  std::vector<interventions::InterventionEvent> events_;
  std::function<void(diagnostics::MetricsRecord&)> epoch_callback_;
};

}  // namespace plasticity::ppo
