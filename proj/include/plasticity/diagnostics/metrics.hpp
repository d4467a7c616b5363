#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "plasticity/env/gridworld.hpp"
#include "plasticity/nn/network.hpp"
#include "plasticity/shift/round_plan.hpp"

namespace plasticity::diagnostics {

using Params = nn::ParameterStore<Real>;
using Tensor = nn::Tensor<Real>;

/// Per-epoch snapshot. `episode_returns` lists every episode finished during the epoch, in
/// completion order; `train_reward` is their mean.
struct MetricsRecord {
  int epoch = 0;  // 1-based, counted across the whole run
  int round = 0;
  double train_reward = 0.0;
  std::vector<double> episode_returns;
  std::optional<double> test_reward;
  double entropy = 0.0;
  double weight_mag = 0.0;
  double weight_diff = 0.0;
  double grad_norm = 0.0;
  double dead_unit_fraction = 0.0;
};

/// Fraction of hidden units (CReLU: each half counted separately) whose post-activation is
/// exactly zero on every row of `batch`. Dead means "never strictly positive".
double dead_unit_fraction(const nn::NetworkSpec& spec, const Params& params, const Tensor& batch);

/// Global L2 norm of all parameters.
double weight_mag(const Params& params);

/// Global L2 norm of (params - previous); the stores must have identical structure.
double weight_diff(const Params& params, const Params& previous);

double grad_norm(const nn::Gradients<Real>& grads);

struct NormalizedRewards {
  std::vector<double> values;       // per round; round 0 is 0 by construction
  std::vector<double> raw;          // per-round mean over the final `window` episodes
  std::vector<int> short_rounds;    // rounds with fewer than `window` episodes (all were used)
};

/// Mean of each round's final `window` episode returns, shifted so the first round is zero.
NormalizedRewards normalized_reward(const std::vector<std::vector<double>>& round_episode_returns,
                                    std::size_t window = 50);

/// Policy callback: given the (already permuted) observation, return an action.
using PolicyFn = std::function<int(const env::Observation&, const env::GridworldInstance&, Rng&)>;

/// Mean episodic return over `n_episodes`, cycling through `instances` in order.
double evaluate_policy(const PolicyFn& policy, const std::vector<env::GridworldInstance>& instances,
                       const shift::PermutationMap& map, int n_episodes, Rng& rng);

/// Stochastic-policy evaluation of the network on held-out instances. Read-only on params.
double evaluate_test(const nn::NetworkSpec& spec, const Params& params,
                     const std::vector<env::GridworldInstance>& instances, const shift::PermutationMap& map,
                     int n_episodes, Rng& rng);

}  // namespace plasticity::diagnostics
