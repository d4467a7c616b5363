#include "plasticity/ppo/gae.hpp"

#include "plasticity/errors.hpp"

namespace plasticity::ppo {

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, std::span<const double> bootstrap, int n_envs,
                      double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (n == 0) throw UsageError("compute_gae: empty buffer");
  if (n_envs < 1 || n % static_cast<std::size_t>(n_envs) != 0) {
    throw UsageError("compute_gae: length must be a positive multiple of n_envs");
  }
  if (values.size() != n || dones.size() != n || bootstrap.size() != static_cast<std::size_t>(n_envs)) {
    throw UsageError("compute_gae: mismatched input lengths");
  }
  const std::size_t envs = static_cast<std::size_t>(n_envs);
  const std::size_t steps = n / envs;

  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  for (std::size_t e = 0; e < envs; ++e) {
    double next_value = bootstrap[e];
    double next_adv = 0.0;
    for (std::size_t t = steps; t-- > 0;) {
      const std::size_t i = t * envs + e;
      const double live = dones[i] ? 0.0 : 1.0;
      const double delta = rewards[i] + gamma * next_value * live - values[i];
      next_adv = delta + gamma * lambda * live * next_adv;
      out.advantages[i] = next_adv;
      out.returns[i] = next_adv + values[i];
      next_value = values[i];
    }
  }
  return out;
}

}  // namespace plasticity::ppo
