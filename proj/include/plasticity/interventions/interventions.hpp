#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plasticity/nn/adam.hpp"
#include "plasticity/nn/network.hpp"
#include "plasticity/nn/parameter_store.hpp"

namespace plasticity::interventions {

using Params = nn::ParameterStore<Real>;
using Adam = nn::AdamState<Real>;
using Grads = nn::Gradients<Real>;
using Tensor = nn::Tensor<Real>;

enum class Kind {
  WarmStart,
  ResetAll,
  ResetFinal,
  ShrinkPerturb,
  SoftShrinkPerturb,
  L2Norm,
  RegenReg,
  LayerNorm,
  Crelu,
  PlasticityInjection,
  Redo,
};

std::string to_string(Kind k);
Kind parse_kind(const std::string& name);

/// Method selection plus every intervention hyperparameter. Defaults are the gridworld values.
struct InterventionConfig {
  Kind kind = Kind::WarmStart;
  bool layer_norm = false;  // composable with SoftShrinkPerturb and RegenReg
  double shrink_perturb_beta = 0.5;
  double soft_shrink_perturb_beta = 1e-6;
  double l2_alpha = 1e-3;
  double regen_alpha = 1e-4;
  int redo_period = 10;  // epochs
  double redo_tau = 0.025;
  bool squared_penalty = true;

  /// Method name used in archives and tables, e.g. "regen_reg+ln".
  std::string label() const;
  void validate() const;

  /// Parses a method label such as "soft_shrink_perturb+ln" (hyperparameters stay default).
  static InterventionConfig from_label(const std::string& label);
};

enum class PenaltyKind { None, L2, Regen };

struct Penalty {
  PenaltyKind kind = PenaltyKind::None;
  double alpha = 0.0;
  bool squared = true;
};

/// alpha * sum(current - init_snapshot)^2 over trainable parameters (or alpha * ||.||_2 when
/// not squared). Adds its gradient into `grads` when non-null.
double regen_reg_loss(const Params& params, double alpha, Grads* grads = nullptr, bool squared = true);

/// alpha * sum(current^2) over trainable parameters (or alpha * ||.||_2 when not squared).
double l2_loss(const Params& params, double alpha, Grads* grads = nullptr, bool squared = true);

double penalty_loss(const Penalty& penalty, const Params& params, Grads* grads);

/// current <- (1 - beta) * current + beta * fresh, fresh drawn from each entry's sampler.
/// Only trainable entries are touched. Returns the number of scalars touched.
Index shrink_perturb(Params& params, double beta, Rng& rng);

/// Redraws every policy/value head parameter and clears its optimizer moments.
Index reset_final(Params& params, Adam& adam, Rng& rng);

/// Fresh parameters for `spec` and a cleared optimizer.
Index reset_all(const nn::NetworkSpec& spec, Params& params, Adam& adam, Rng& rng);

/// Replaces the head `head` ("policy" or "value") by old + a - sg(b), with a == b freshly drawn
/// and the old weights frozen. A previous injection is folded into the frozen weights first.
Index plasticity_injection(Params& params, Adam& adam, Rng& rng, const std::string& head);

/// Per-unit dormancy score: mean |activation| over the batch divided by the layer mean of
/// that quantity. CReLU units are scored on their two halves combined. One vector per layer.
std::vector<std::vector<double>> dormancy_scores(const nn::NetworkSpec& spec, const Params& params,
                                                 const Tensor& batch);

/// Re-initializes units with dormancy score <= tau: fresh incoming weights and bias, zeroed
/// outgoing weights, zeroed optimizer moments on the touched entries. Returns units reset.
Index redo(const nn::NetworkSpec& spec, Params& params, Adam& adam, const Tensor& batch, double tau,
           Rng& rng);

struct InterventionEvent {
  int epoch = 0;
  int round = 0;
  std::string kind;
  Index params_touched = 0;
};

/// Binds an InterventionConfig to the training loop's three hook points.
class InterventionHooks {
 public:
  InterventionHooks(InterventionConfig config, std::uint64_t stream_seed);

  const InterventionConfig& config() const { return config_; }

  /// Architecture variant the method trains with (CReLU, LayerNorm).
  nn::NetworkSpec architecture(nn::NetworkSpec base) const;

  Penalty penalty() const;

  /// Runs after every optimizer step.
  void after_optimizer_step(Params& params, int epoch, int round, std::vector<InterventionEvent>& events);

  /// Runs after every completed epoch (1-based count in `epoch`).
  void after_epoch(const nn::NetworkSpec& spec, Params& params, Adam& adam, const Tensor& eval_batch, int epoch,
                   int round, std::vector<InterventionEvent>& events);

  /// Runs once between round `round` and round `round + 1`.
  void at_round_boundary(const nn::NetworkSpec& spec, Params& params, Adam& adam, int epoch, int round,
                         std::vector<InterventionEvent>& events);

 private:
  InterventionConfig config_;
  Rng rng_;
};

}  // namespace plasticity::interventions
