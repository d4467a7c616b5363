#include "plasticity/ppo/loss.hpp"

#include <algorithm>
#include <cmath>

#include "plasticity/nn/policy.hpp"

namespace plasticity::ppo {

double clipped_surrogate(double ratio, double advantage, double epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

namespace {
void require_finite(double x, const char* term) {
  if (!std::isfinite(x)) throw NumericalError(std::string("ppo_loss: non-finite ") + term + " term");
}
}  // namespace

LossResult ppo_loss(const nn::NetworkSpec& spec, const nn::ParameterStore<Real>& params, const Minibatch& batch,
                    const PpoConfig& config, const interventions::Penalty& penalty, bool with_gradients) {
  const Index n = batch.obs.rows();
  if (n == 0) throw UsageError("ppo_loss: empty minibatch");
  const auto sz = static_cast<std::size_t>(n);
  if (batch.actions.size() != sz || batch.log_prob_old.size() != sz || batch.advantages.size() != sz ||
      batch.returns.size() != sz) {
    throw DimensionError("ppo_loss: minibatch fields have inconsistent lengths");
  }

  const auto fwd = nn::forward(spec, params, batch.obs, with_gradients);
  const nn::Tensor<Real> logp = nn::log_softmax(fwd.logits);
  const nn::ColVector<Real> entropy = nn::categorical_entropy(logp);
  const double inv_n = 1.0 / static_cast<double>(n);
  const double eps = config.clip_epsilon;

  nn::Tensor<Real> dlogits = nn::Tensor<Real>::Zero(n, spec.n_actions);
  nn::Tensor<Real> dvalues(n, 1);
  LossTerms t;
  Index clipped = 0;
  for (Index i = 0; i < n; ++i) {
    const int a = batch.actions[static_cast<std::size_t>(i)];
    if (a < 0 || a >= spec.n_actions) throw DimensionError("ppo_loss: action index out of range");
    const double adv = batch.advantages[static_cast<std::size_t>(i)];
    const double log_ratio = logp(i, a) - batch.log_prob_old[static_cast<std::size_t>(i)];
    const double clamped = std::clamp(log_ratio, -kLogRatioClamp, kLogRatioClamp);
    const double ratio = std::exp(clamped);
    const double unclipped_obj = ratio * adv;
    const double clipped_obj = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
    double dobj_dratio;
    if (unclipped_obj <= clipped_obj) {
      t.policy -= unclipped_obj;
      dobj_dratio = adv;
    } else {
      t.policy -= clipped_obj;
      dobj_dratio = (ratio > 1.0 - eps && ratio < 1.0 + eps) ? adv : 0.0;
    }
    if (ratio < 1.0 - eps || ratio > 1.0 + eps) ++clipped;
    const double dratio_dlogp = (log_ratio > -kLogRatioClamp && log_ratio < kLogRatioClamp) ? ratio : 0.0;
    const double dloss_dlogp = -inv_n * dobj_dratio * dratio_dlogp;

    const double v = fwd.values(i, 0);
    const double err = v - batch.returns[static_cast<std::size_t>(i)];
    t.value += err * err;
    t.entropy += entropy(i);

    if (with_gradients) {
      const double h = entropy(i);
      for (Index j = 0; j < spec.n_actions; ++j) {
        const double p = std::exp(logp(i, j));
        const double dlogp_dz = (j == a ? 1.0 : 0.0) - p;
        // d(-beta * H / n)/dz_j = beta / n * p_j * (log p_j + H)
        dlogits(i, j) = dloss_dlogp * dlogp_dz + config.entropy_coef * inv_n * p * (logp(i, j) + h);
      }
      dvalues(i, 0) = 2.0 * config.value_coef * err * inv_n;
    }
  }
  t.policy *= inv_n;
  t.value *= inv_n;
  t.entropy *= inv_n;
  t.clip_fraction = static_cast<double>(clipped) * inv_n;
  require_finite(t.policy, "policy");
  require_finite(t.value, "value");
  require_finite(t.entropy, "entropy");

  LossResult out;
  if (with_gradients) out.grads = nn::backward(spec, params, fwd, dlogits, dvalues);
  t.penalty = interventions::penalty_loss(penalty, params, with_gradients ? &out.grads : nullptr);
  require_finite(t.penalty, "penalty");
  t.total = t.policy + config.value_coef * t.value - config.entropy_coef * t.entropy + t.penalty;
  out.terms = t;
  return out;
}

}  // namespace plasticity::ppo
