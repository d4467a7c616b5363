// Independent reference computations shared by the unit and acceptance tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "plasticity/env/gridworld.hpp"
#include "plasticity/nn/network.hpp"
#include "plasticity/ppo/loss.hpp"

namespace testing_support {

using namespace plasticity;

/// Advantages from the defining sum  A_t = sum_l (gamma lambda)^l delta_{t+l}, with the sum
/// cut at the first terminal step, evaluated per stream without any recursion.
inline std::vector<double> brute_force_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                                           const std::vector<std::uint8_t>& dones,
                                           const std::vector<double>& bootstrap, int n_envs, double gamma,
                                           double lambda) {
  const std::size_t steps = rewards.size() / static_cast<std::size_t>(n_envs);
  std::vector<double> adv(rewards.size(), 0.0);
  for (int e = 0; e < n_envs; ++e) {
    const auto at = [&](std::size_t t) { return t * static_cast<std::size_t>(n_envs) + static_cast<std::size_t>(e); };
    std::vector<double> delta(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      const double next_v = t + 1 < steps ? values[at(t + 1)] : bootstrap[static_cast<std::size_t>(e)];
      delta[t] = rewards[at(t)] + gamma * next_v * (dones[at(t)] ? 0.0 : 1.0) - values[at(t)];
    }
    for (std::size_t t = 0; t < steps; ++t) {
      double sum = 0.0;
      for (std::size_t l = 0; t + l < steps; ++l) {
        sum += std::pow(gamma * lambda, static_cast<double>(l)) * delta[t + l];
        if (dones[at(t + l)]) break;
      }
      adv[at(t)] = sum;
    }
  }
  return adv;
}

struct GradientCheck {
  double max_rel_error = 0.0;
  std::string worst;
  int checked = 0;
};

/// Central finite differences of `loss` against `analytic` for every trainable scalar.
/// Relative error is |a - n| / max(|a|, |n|, floor).
inline GradientCheck check_gradients(nn::ParameterStore<Real>& params, const nn::Gradients<Real>& analytic,
                                     const std::function<double()>& loss, double h = 1e-5, double floor = 1e-6) {
  GradientCheck out;
  for (auto& e : params.entries()) {
    if (!e.trainable) continue;
    const auto& g = analytic.at(e.name);
    for (Index i = 0; i < e.current.size(); ++i) {
      const double orig = e.current.data()[i];
      e.current.data()[i] = orig + h;
      const double up = loss();
      e.current.data()[i] = orig - h;
      const double down = loss();
      e.current.data()[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = g.data()[i];
      const double rel = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), floor});
      ++out.checked;
      if (rel > out.max_rel_error) {
        out.max_rel_error = rel;
        out.worst = e.name + "[" + std::to_string(i) + "] analytic=" + std::to_string(a) +
                    " numeric=" + std::to_string(numeric);
      }
    }
  }
  return out;
}

/// Random minibatch with realistic old log-probabilities (a perturbation of the current policy),
/// so ratios fall both inside and outside the clip range.
inline ppo::Minibatch random_minibatch(const nn::NetworkSpec& spec, const nn::ParameterStore<Real>& params, int n,
                                       Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> act(0, static_cast<int>(spec.n_actions) - 1);
  ppo::Minibatch b;
  b.obs.resize(n, spec.input_dim);
  for (Index i = 0; i < b.obs.size(); ++i) b.obs.data()[i] = gauss(rng);
  const auto fwd = nn::forward(spec, params, b.obs, false);
  for (int i = 0; i < n; ++i) {
    const auto a = act(rng);
    b.actions.push_back(a);
    const auto row = fwd.logits.row(i);
    const Real mx = row.maxCoeff();
    double lse = 0.0;
    for (Index j = 0; j < row.size(); ++j) lse += std::exp(row(j) - mx);
    const double logp = row(a) - mx - std::log(lse);
    b.log_prob_old.push_back(std::min(0.0, logp + 0.3 * gauss(rng)));
    b.advantages.push_back(gauss(rng));
    b.returns.push_back(gauss(rng));
  }
  return b;
}

/// Fewest steps from the center to every cell (walls impassable); -1 when unreachable.
inline std::vector<int> bfs_distances(const env::Grid& grid, env::Position from) {
  std::vector<int> dist(env::kCells, -1);
  std::deque<env::Position> q{from};
  dist[static_cast<std::size_t>(from.index())] = 0;
  const int dr[4] = {-1, 1, 0, 0};
  const int dc[4] = {0, 0, -1, 1};
  while (!q.empty()) {
    const auto p = q.front();
    q.pop_front();
    for (int k = 0; k < 4; ++k) {
      const env::Position n{p.row + dr[k], p.col + dc[k]};
      if (n.row < 0 || n.col < 0 || n.row >= env::kGridSize || n.col >= env::kGridSize) continue;
      if (grid[static_cast<std::size_t>(n.index())] == env::Cell::Wall) continue;
      if (dist[static_cast<std::size_t>(n.index())] >= 0) continue;
      dist[static_cast<std::size_t>(n.index())] = dist[static_cast<std::size_t>(p.index())] + 1;
      q.push_back(n);
    }
  }
  return dist;
}

}  // namespace testing_support
