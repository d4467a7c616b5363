#include "plasticity/diagnostics/metrics.hpp"

#include <cmath>
#include <numeric>

#include "plasticity/nn/policy.hpp"

namespace plasticity::diagnostics {

double dead_unit_fraction(const nn::NetworkSpec& spec, const Params& params, const Tensor& batch) {
  if (batch.rows() == 0) throw UsageError("dead_unit_fraction: empty evaluation batch");
  const auto fwd = nn::forward(spec, params, batch, true);
  Index dead = 0;
  Index total = 0;
  for (const auto& layer : fwd.trace.layers) {
    const Eigen::Array<bool, 1, Eigen::Dynamic> alive = (layer.post.array() > 0.0).colwise().any();
    total += layer.post.cols();
    dead += layer.post.cols() - alive.count();
  }
  return total == 0 ? 0.0 : static_cast<double>(dead) / static_cast<double>(total);
}

double weight_mag(const Params& params) {
  double sq = 0.0;
  for (const auto& e : params.entries()) sq += e.current.squaredNorm();
  return std::sqrt(sq);
}

double weight_diff(const Params& params, const Params& previous) {
  if (params.size() != previous.size()) throw UsageError("weight_diff: parameter stores differ in structure");
  double sq = 0.0;
  auto a = params.entries();
  auto b = previous.entries();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name) throw UsageError("weight_diff: parameter stores differ in structure");
    nn::require_shape(b[i].current, a[i].current.rows(), a[i].current.cols(), "weight_diff " + a[i].name);
    sq += (a[i].current - b[i].current).squaredNorm();
  }
  return std::sqrt(sq);
}

double grad_norm(const nn::Gradients<Real>& grads) {
  double sq = 0.0;
  for (const auto& [name, g] : grads) sq += g.squaredNorm();
  return std::sqrt(sq);
}

NormalizedRewards normalized_reward(const std::vector<std::vector<double>>& round_episode_returns,
                                    std::size_t window) {
  NormalizedRewards out;
  for (std::size_t r = 0; r < round_episode_returns.size(); ++r) {
    const auto& ep = round_episode_returns[r];
    if (ep.empty()) throw UsageError("normalized_reward: round " + std::to_string(r) + " has no episodes");
    const std::size_t n = std::min(window, ep.size());
    if (ep.size() < window) out.short_rounds.push_back(static_cast<int>(r));
    out.raw.push_back(std::accumulate(ep.end() - static_cast<std::ptrdiff_t>(n), ep.end(), 0.0) /
                      static_cast<double>(n));
  }
  for (double v : out.raw) out.values.push_back(v - out.raw.front());
  return out;
}

double evaluate_policy(const PolicyFn& policy, const std::vector<env::GridworldInstance>& instances,
                       const shift::PermutationMap& map, int n_episodes, Rng& rng) {
  if (instances.empty()) throw UsageError("evaluate: no instances");
  if (n_episodes < 1) throw UsageError("evaluate: n_episodes must be >= 1");
  double total = 0.0;
  for (int ep = 0; ep < n_episodes; ++ep) {
    env::GridworldInstance game = instances[static_cast<std::size_t>(ep) % instances.size()];
    env::Observation obs = shift::apply_permutation(game.reset(), map);
    bool done = false;
    while (!done) {
      const int a = policy(obs, game, rng);
      auto step = game.step(static_cast<env::Action>(a));
      total += step.reward;
      done = step.done;
      obs = shift::apply_permutation(step.observation, map);
    }
  }
  return total / n_episodes;
}

double evaluate_test(const nn::NetworkSpec& spec, const Params& params,
                     const std::vector<env::GridworldInstance>& instances, const shift::PermutationMap& map,
                     int n_episodes, Rng& rng) {
  PolicyFn policy = [&](const env::Observation& obs, const env::GridworldInstance&, Rng& r) {
    Tensor batch = obs;
    const auto fwd = nn::forward(spec, params, batch, false);
    const Tensor logp = nn::log_softmax(fwd.logits);
    return nn::sample_categorical<Real>(logp.row(0), r);
  };
  return evaluate_policy(policy, instances, map, n_episodes, rng);
}

}  // namespace plasticity::diagnostics
