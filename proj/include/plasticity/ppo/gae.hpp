#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace plasticity::ppo {

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;  // advantages + values
};

/// Generalized advantage estimation by backward recursion,
///   delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t)
///   A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}.
///
/// Inputs are time-major over `n_envs` interleaved streams: entry t * n_envs + e. The value
/// after the last stored step of stream e is `bootstrap[e]`.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, std::span<const double> bootstrap, int n_envs,
                      double gamma, double lambda);

}  // namespace plasticity::ppo
