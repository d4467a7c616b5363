#pragma once

#include <vector>

#include "plasticity/interventions/interventions.hpp"
#include "plasticity/nn/network.hpp"
#include "plasticity/ppo/config.hpp"

namespace plasticity::ppo {

struct Minibatch {
  nn::Tensor<Real> obs;
  std::vector<int> actions;
  std::vector<double> log_prob_old;
  std::vector<double> advantages;
  std::vector<double> returns;
};

struct LossTerms {
  double policy = 0.0;   // -E[min(rho A, clip(rho) A)]
  double value = 0.0;    // E[(V - R)^2], before the coefficient
  double entropy = 0.0;  // E[H(pi)], before the coefficient
  double penalty = 0.0;  // L2 / regenerative term, already scaled by alpha
  double total = 0.0;
  double clip_fraction = 0.0;
};

struct LossResult {
  LossTerms terms;
  nn::Gradients<Real> grads;
};

inline constexpr double kLogRatioClamp = 20.0;

/// min(rho * A, clip(rho, 1 - eps, 1 + eps) * A).
double clipped_surrogate(double ratio, double advantage, double epsilon);

/// Full PPO objective  policy + c_v * value - beta * entropy + penalty  and, when requested,
/// its gradient with respect to every parameter. Throws NumericalError naming the first
/// non-finite term.
LossResult ppo_loss(const nn::NetworkSpec& spec, const nn::ParameterStore<Real>& params, const Minibatch& batch,
                    const PpoConfig& config, const interventions::Penalty& penalty = {},
                    bool with_gradients = true);

}  // namespace plasticity::ppo
