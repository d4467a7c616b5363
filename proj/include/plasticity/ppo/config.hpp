#pragma once

#include "plasticity/errors.hpp"

namespace plasticity::ppo {

struct PpoConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip_epsilon = 0.2;
  double entropy_coef = 0.02;
  double value_coef = 0.5;
  double learning_rate = 5e-4;
  int minibatch_size = 64;
  int update_epochs = 3;
  int buffer_size = 1024;
  int n_workers = 8;  // parallel rollout slots; one env step each per iteration
  bool normalize_advantages = true;
  double max_grad_norm = 0.0;  // 0 disables clipping

  void validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("ppo: gamma must be in (0, 1]");
    if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("ppo: lambda must be in (0, 1]");
    if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw ConfigError("ppo: clip epsilon must be in (0, 1)");
    if (entropy_coef < 0.0 || value_coef <= 0.0) throw ConfigError("ppo: loss coefficients must be positive");
    if (learning_rate <= 0.0) throw ConfigError("ppo: learning rate must be > 0");
    if (minibatch_size < 1 || update_epochs < 1 || buffer_size < 1 || n_workers < 1) {
      throw ConfigError("ppo: sizes must be >= 1");
    }
    if (buffer_size % n_workers != 0) throw ConfigError("ppo: buffer_size must be a multiple of n_workers");
    if (minibatch_size > buffer_size) throw ConfigError("ppo: minibatch larger than buffer");
    if (max_grad_norm < 0.0) throw ConfigError("ppo: max_grad_norm must be >= 0");
  }
};

}  // namespace plasticity::ppo
