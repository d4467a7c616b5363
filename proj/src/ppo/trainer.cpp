#include "plasticity/ppo/trainer.hpp"

#include <cmath>
#include <numeric>

#include "plasticity/nn/policy.hpp"
#include "plasticity/ppo/loss.hpp"

namespace plasticity::ppo {

Agent make_agent(const nn::NetworkSpec& spec, const PpoConfig& config, Rng& init_rng) {
  Agent a{spec, nn::init_parameters<Real>(spec, init_rng), {}};
  a.adam.options.learning_rate = config.learning_rate;
  return a;
}

PpoTrainer::PpoTrainer(Agent& agent, const PpoConfig& config, interventions::InterventionHooks& hooks,
                       TrainerSeeds seeds, int eval_batch_size)
    : agent_(agent),
      config_(config),
      hooks_(hooks),
      rollout_rng_(seeds.rollout),
      shuffle_rng_(seeds.shuffle),
      diag_rng_(seeds.diagnostics),
      eval_batch_size_(eval_batch_size),
      buffer_(config.buffer_size, config.n_workers, agent.spec.input_dim),
      previous_(agent.params) {
  config_.validate();
  if (eval_batch_size_ < 1) throw ConfigError("trainer: evaluation batch size must be >= 1");
}

int PpoTrainer::epochs_per_round(const PpoConfig& config, long iterations) {
  return static_cast<int>(iterations * config.n_workers / config.buffer_size);
}

std::vector<interventions::InterventionEvent> PpoTrainer::take_events() {
  std::vector<interventions::InterventionEvent> out;
  out.swap(events_);
  return out;
}

void PpoTrainer::start_episode(Slot& slot, const std::vector<env::GridworldInstance>& instances) {
  std::uniform_int_distribution<std::size_t> pick(0, instances.size() - 1);
  slot.game = instances[pick(rollout_rng_)];
  slot.obs = slot.game.reset();
  slot.episode_return = 0.0;
}

void PpoTrainer::fill_batch(const std::vector<Slot>& slots, const shift::PermutationMap& map,
                            nn::Tensor<Real>& batch) const {
  for (std::size_t e = 0; e < slots.size(); ++e) {
    shift::apply_permutation(slots[e].obs.data(), batch.row(static_cast<Index>(e)).data(), map);
  }
}

std::vector<diagnostics::MetricsRecord> PpoTrainer::train_round(int round,
                                                                const std::vector<env::GridworldInstance>& instances,
                                                                const shift::PermutationMap& map, long iterations) {
  std::vector<diagnostics::MetricsRecord> records;
  if (iterations <= 0) return records;
  if (instances.empty()) throw UsageError("train_round: no active instances");
  if (agent_.spec.input_dim != env::kObservationSize) {
    throw DimensionError("train_round: network input_dim must be 484 for the gridworld");
  }

  buffer_.clear();
  entropy_sum_ = 0.0;
  epoch_returns_.clear();

  std::vector<Slot> slots;
  slots.reserve(static_cast<std::size_t>(config_.n_workers));
  for (int e = 0; e < config_.n_workers; ++e) {
    slots.push_back(Slot{instances.front(), {}, 0.0});
    start_episode(slots.back(), instances);
  }

  nn::Tensor<Real> batch(config_.n_workers, env::kObservationSize);
  for (long it = 0; it < iterations; ++it) {
    fill_batch(slots, map, batch);
    const auto fwd = nn::forward(agent_.spec, agent_.params, batch, false);
    const nn::Tensor<Real> logp = nn::log_softmax(fwd.logits);
    const nn::ColVector<Real> ent = nn::categorical_entropy(logp);
    for (int e = 0; e < config_.n_workers; ++e) {
      Slot& s = slots[static_cast<std::size_t>(e)];
      const int a = nn::sample_categorical<Real>(logp.row(e), rollout_rng_);
      env::StepResult step = s.game.step(static_cast<env::Action>(a));
      buffer_.add(std::span<const Real>(batch.row(e).data(), env::kObservationSize), a, logp(e, a), step.reward,
                  fwd.values(e, 0), step.done);
      entropy_sum_ += ent(e);
      s.episode_return += step.reward;
      if (step.done) {
        epoch_returns_.push_back(s.episode_return);
        start_episode(s, instances);
      } else {
        s.obs = std::move(step.observation);
      }
    }
    if (buffer_.full()) records.push_back(update(round, slots, map));
  }
  buffer_.clear();
  return records;
}

diagnostics::MetricsRecord PpoTrainer::update(int round, const std::vector<Slot>& slots,
                                              const shift::PermutationMap& map) {
  auto& spec = agent_.spec;
  auto& params = agent_.params;

  nn::Tensor<Real> next(config_.n_workers, env::kObservationSize);
  fill_batch(slots, map, next);
  const auto boot_fwd = nn::forward(spec, params, next, false);
  std::vector<double> bootstrap(boot_fwd.values.data(), boot_fwd.values.data() + boot_fwd.values.size());
  buffer_.compute_advantages(bootstrap, config_.gamma, config_.lambda);
  if (config_.normalize_advantages) buffer_.normalize_advantages();

  const int n = buffer_.size();
  const int mb = config_.minibatch_size;
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  const interventions::Penalty penalty = hooks_.penalty();
  const auto& obs = buffer_.observations();

  double grad_norm_sum = 0.0;
  int steps = 0;
  Minibatch batch;
  for (int ue = 0; ue < config_.update_epochs; ++ue) {
    std::shuffle(order.begin(), order.end(), shuffle_rng_);
    for (int start = 0; start + mb <= n; start += mb) {
      batch.obs.resize(mb, obs.cols());
      batch.actions.resize(static_cast<std::size_t>(mb));
      batch.log_prob_old.resize(static_cast<std::size_t>(mb));
      batch.advantages.resize(static_cast<std::size_t>(mb));
      batch.returns.resize(static_cast<std::size_t>(mb));
      for (int k = 0; k < mb; ++k) {
        const int i = order[static_cast<std::size_t>(start + k)];
        const auto ks = static_cast<std::size_t>(k);
        const auto is = static_cast<std::size_t>(i);
        batch.obs.row(k) = obs.row(i);
        batch.actions[ks] = buffer_.actions()[is];
        batch.log_prob_old[ks] = buffer_.log_probs()[is];
        batch.advantages[ks] = buffer_.advantages()[is];
        batch.returns[ks] = buffer_.returns()[is];
      }
      LossResult res = ppo_loss(spec, params, batch, config_, penalty, true);
      const double gn = diagnostics::grad_norm(res.grads);
      if (!std::isfinite(gn)) throw NumericalError("ppo update: non-finite gradient norm");
      grad_norm_sum += gn;
      ++steps;
      if (config_.max_grad_norm > 0.0 && gn > config_.max_grad_norm) {
        for (auto& [name, g] : res.grads) g *= config_.max_grad_norm / gn;
      }
      nn::adam_step(params, res.grads, agent_.adam);
      hooks_.after_optimizer_step(params, epoch_ + 1, round, events_);
    }
  }
  ++epoch_;

  diagnostics::MetricsRecord rec;
  rec.epoch = epoch_;
  rec.round = round;
  rec.episode_returns = std::move(epoch_returns_);
  epoch_returns_.clear();
  if (!rec.episode_returns.empty()) {
    last_train_reward_ = std::accumulate(rec.episode_returns.begin(), rec.episode_returns.end(), 0.0) /
                         static_cast<double>(rec.episode_returns.size());
  }
  rec.train_reward = last_train_reward_;
  rec.entropy = entropy_sum_ / n;
  entropy_sum_ = 0.0;
  rec.grad_norm = steps > 0 ? grad_norm_sum / steps : 0.0;
  rec.weight_mag = diagnostics::weight_mag(params);
  rec.weight_diff = diagnostics::weight_diff(params, previous_);

  const int m = std::min(eval_batch_size_, n);
  nn::Tensor<Real> eval(m, obs.cols());
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int k = 0; k < m; ++k) eval.row(k) = obs.row(pick(diag_rng_));
  rec.dead_unit_fraction = diagnostics::dead_unit_fraction(spec, params, eval);

  hooks_.after_epoch(spec, params, agent_.adam, eval, epoch_, round, events_);
  previous_ = params;
  buffer_.clear();
  if (epoch_callback_) epoch_callback_(rec);
  return rec;
}

void PpoTrainer::end_round(int round) {
  hooks_.at_round_boundary(agent_.spec, agent_.params, agent_.adam, epoch_, round, events_);
  previous_ = agent_.params;
}

}  // namespace plasticity::ppo
