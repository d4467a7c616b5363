#include "plasticity/interventions/interventions.hpp"

#include <algorithm>
#include <cmath>

namespace plasticity::interventions {

namespace {

struct KindName {
  Kind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {Kind::WarmStart, "warm_start"},
    {Kind::ResetAll, "reset_all"},
    {Kind::ResetFinal, "reset_final"},
    {Kind::ShrinkPerturb, "shrink_perturb"},
    {Kind::SoftShrinkPerturb, "soft_shrink_perturb"},
    {Kind::L2Norm, "l2_norm"},
    {Kind::RegenReg, "regen_reg"},
    {Kind::LayerNorm, "layer_norm"},
    {Kind::Crelu, "crelu"},
    {Kind::PlasticityInjection, "plasticity_injection"},
    {Kind::Redo, "redo"},
};

// Shared by the squared and unsquared penalty forms: `diff(e)` yields the penalised tensor.
template <typename DiffFn>
double norm_penalty(const Params& params, double alpha, Grads* grads, bool squared, DiffFn diff) {
  double sq = 0.0;
  for (const auto& e : params.entries()) {
    if (e.trainable) sq += diff(e).squaredNorm();
  }
  if (squared) {
    if (grads) {
      for (const auto& e : params.entries()) {
        if (!e.trainable) continue;
        Tensor g = (2.0 * alpha) * diff(e);
        auto it = grads->find(e.name);
        if (it == grads->end()) grads->emplace(e.name, std::move(g));
        else it->second += g;
      }
    }
    return alpha * sq;
  }
  const double norm = std::sqrt(sq);
  if (grads && norm > 0.0) {
    for (const auto& e : params.entries()) {
      if (!e.trainable) continue;
      Tensor g = (alpha / norm) * diff(e);
      auto it = grads->find(e.name);
      if (it == grads->end()) grads->emplace(e.name, std::move(g));
      else it->second += g;
    }
  }
  return alpha * norm;
}

}  // namespace

std::string to_string(Kind k) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == k) return kn.name;
  }
  return "unknown";
}

Kind parse_kind(const std::string& name) {
  for (const auto& kn : kKindNames) {
    if (name == kn.name) return kn.kind;
  }
  throw ConfigError("unknown intervention '" + name + "'");
}

std::string InterventionConfig::label() const {
  std::string s = to_string(kind);
  if (layer_norm && kind != Kind::LayerNorm) s += "+ln";
  return s;
}

void InterventionConfig::validate() const {
  if (layer_norm && kind != Kind::SoftShrinkPerturb && kind != Kind::RegenReg && kind != Kind::LayerNorm) {
    throw ConfigError("LayerNorm combines only with soft_shrink_perturb or regen_reg, not " + to_string(kind));
  }
  auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!in_unit(shrink_perturb_beta) || !in_unit(soft_shrink_perturb_beta)) {
    throw ConfigError("shrink+perturb beta must lie in [0, 1]");
  }
  if (l2_alpha < 0.0 || regen_alpha < 0.0) throw ConfigError("penalty alpha must be >= 0");
  if (redo_period < 1) throw ConfigError("redo period must be >= 1 epoch");
  if (redo_tau < 0.0) throw ConfigError("redo tau must be >= 0");
}

InterventionConfig InterventionConfig::from_label(const std::string& label) {
  InterventionConfig c;
  std::string base = label;
  const std::string suffix = "+ln";
  if (base.size() > suffix.size() && base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
    base.resize(base.size() - suffix.size());
    c.layer_norm = true;
  }
  c.kind = parse_kind(base);
  if (c.kind == Kind::LayerNorm) c.layer_norm = true;
  c.validate();
  return c;
}

double regen_reg_loss(const Params& params, double alpha, Grads* grads, bool squared) {
  return norm_penalty(params, alpha, grads, squared,
                      [](const auto& e) -> Tensor { return e.current - e.init_snapshot; });
}

double l2_loss(const Params& params, double alpha, Grads* grads, bool squared) {
  return norm_penalty(params, alpha, grads, squared, [](const auto& e) -> const Tensor& { return e.current; });
}

double penalty_loss(const Penalty& penalty, const Params& params, Grads* grads) {
  switch (penalty.kind) {
    case PenaltyKind::None: return 0.0;
    case PenaltyKind::L2: return l2_loss(params, penalty.alpha, grads, penalty.squared);
    case PenaltyKind::Regen: return regen_reg_loss(params, penalty.alpha, grads, penalty.squared);
  }
  return 0.0;
}

Index shrink_perturb(Params& params, double beta, Rng& rng) {
  Index touched = 0;
  const double keep = 1.0 - beta;
  for (auto& e : params.entries()) {
    if (!e.trainable) continue;
    const Tensor fresh = e.sampler.sample<Real>(e.current.rows(), e.current.cols(), rng);
    e.current = keep * e.current + beta * fresh;
    touched += e.current.size();
  }
  return touched;
}

Index reset_final(Params& params, Adam& adam, Rng& rng) {
  Index touched = 0;
  for (auto& e : params.entries()) {
    if (!nn::is_head_parameter(e.name)) continue;
    e.current = e.sampler.sample<Real>(e.current.rows(), e.current.cols(), rng);
    adam.zero_moments(e.name);
    touched += e.current.size();
  }
  return touched;
}

Index reset_all(const nn::NetworkSpec& spec, Params& params, Adam& adam, Rng& rng) {
  params = nn::init_parameters<Real>(spec, rng);
  adam.reset();
  return params.parameter_count();
}

Index plasticity_injection(Params& params, Adam& adam, Rng& rng, const std::string& head) {
  if (std::find(nn::kHeadNames.begin(), nn::kHeadNames.end(), head) == nn::kHeadNames.end()) {
    throw UsageError("plasticity injection applies to the policy and value heads only, not '" + head + "'");
  }
  const std::string w = head + ".weight";
  const std::string b = head + ".bias";
  const std::string aw = head + ".inject_a.weight";
  const std::string ab = head + ".inject_a.bias";
  const std::string bw = head + ".inject_b.weight";
  const std::string bb = head + ".inject_b.bias";

  if (params.contains(aw)) {
    params.value(w) += params.value(aw) - params.value(bw);
    params.value(b) += params.value(ab) - params.value(bb);
    for (const auto& n : {aw, ab, bw, bb}) {
      params.remove(n);
      adam.zero_moments(n);
    }
  }
  auto& old_w = params.at(w);
  auto& old_b = params.at(b);
  old_w.trainable = false;
  old_b.trainable = false;
  adam.zero_moments(w);
  adam.zero_moments(b);

  const nn::InitSampler ws = old_w.sampler;
  const nn::InitSampler bs = old_b.sampler;
  Tensor fresh_w = ws.sample<Real>(old_w.current.rows(), old_w.current.cols(), rng);
  Tensor fresh_b = bs.sample<Real>(old_b.current.rows(), old_b.current.cols(), rng);
  const Index touched = 2 * (fresh_w.size() + fresh_b.size());
  params.add_value(aw, fresh_w, ws, true);
  params.add_value(ab, fresh_b, bs, true);
  params.add_value(bw, std::move(fresh_w), ws, false);
  params.add_value(bb, std::move(fresh_b), bs, false);
  return touched;
}

std::vector<std::vector<double>> dormancy_scores(const nn::NetworkSpec& spec, const Params& params,
                                                 const Tensor& batch) {
  const auto fwd = nn::forward(spec, params, batch, true);
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < spec.hidden_dims.size(); ++i) {
    const Tensor& post = fwd.trace.layers[i].post;
    const Index m = spec.affine_width(i);
    Eigen::RowVectorXd s = post.cwiseAbs().colwise().mean();
    Eigen::RowVectorXd unit = s.head(m);
    if (spec.activation == nn::Activation::Crelu) unit += s.tail(m);
    const double layer_mean = unit.mean();
    std::vector<double> scores(m, 0.0);
    if (layer_mean > 0.0) {
      for (Index j = 0; j < m; ++j) scores[j] = unit(j) / layer_mean;
    }
    out.push_back(std::move(scores));
  }
  return out;
}

Index redo(const nn::NetworkSpec& spec, Params& params, Adam& adam, const Tensor& batch, double tau, Rng& rng) {
  const auto scores = dormancy_scores(spec, params, batch);
  Index reset_units = 0;
  const bool crelu = spec.activation == nn::Activation::Crelu;

  for (std::size_t i = 0; i < scores.size(); ++i) {
    const std::string n = nn::hidden_name(i);
    const Index m = spec.affine_width(i);
    std::vector<Index> dormant;
    for (Index j = 0; j < m; ++j) {
      if (scores[i][j] <= tau) dormant.push_back(j);
    }
    if (dormant.empty()) continue;
    reset_units += static_cast<Index>(dormant.size());

    auto& w = params.at(n + ".weight");
    auto& b = params.at(n + ".bias");
    const Tensor fresh_w = w.sampler.sample<Real>(w.current.rows(), w.current.cols(), rng);
    const Tensor fresh_b = b.sampler.sample<Real>(1, b.current.cols(), rng);
    Tensor in_mask = Tensor::Zero(w.current.rows(), w.current.cols());
    Tensor b_mask = Tensor::Zero(1, b.current.cols());
    for (Index j : dormant) {
      w.current.col(j) = fresh_w.col(j);
      b.current(0, j) = fresh_b(0, j);
      in_mask.col(j).setOnes();
      b_mask(0, j) = 1.0;
    }
    adam.zero_moments(w.name, in_mask);
    adam.zero_moments(b.name, b_mask);

    // Outgoing rows: the next hidden layer, or every head matrix after the last hidden layer.
    std::vector<std::string> outgoing;
    if (i + 1 < scores.size()) {
      outgoing.push_back(nn::hidden_name(i + 1) + ".weight");
    } else {
      for (auto h : nn::kHeadNames) {
        for (const char* part : {".weight", ".inject_a.weight", ".inject_b.weight"}) {
          const std::string name = std::string(h) + part;
          if (params.contains(name)) outgoing.push_back(name);
        }
      }
    }
    for (const auto& name : outgoing) {
      auto& ow = params.at(name);
      Tensor out_mask = Tensor::Zero(ow.current.rows(), ow.current.cols());
      for (Index j : dormant) {
        ow.current.row(j).setZero();
        out_mask.row(j).setOnes();
        if (crelu) {
          ow.current.row(j + m).setZero();
          out_mask.row(j + m).setOnes();
        }
      }
      adam.zero_moments(name, out_mask);
    }
  }
  return reset_units;
}

InterventionHooks::InterventionHooks(InterventionConfig config, std::uint64_t stream_seed)
    : config_(std::move(config)), rng_(stream_seed) {
  config_.validate();
}

nn::NetworkSpec InterventionHooks::architecture(nn::NetworkSpec base) const {
  if (config_.kind == Kind::Crelu) base.activation = nn::Activation::Crelu;
  if (config_.layer_norm || config_.kind == Kind::LayerNorm) base.use_layer_norm = true;
  return base;
}

Penalty InterventionHooks::penalty() const {
  switch (config_.kind) {
    case Kind::L2Norm: return {PenaltyKind::L2, config_.l2_alpha, config_.squared_penalty};
    case Kind::RegenReg: return {PenaltyKind::Regen, config_.regen_alpha, config_.squared_penalty};
    default: return {};
  }
}

void InterventionHooks::after_optimizer_step(Params& params, int epoch, int round,
                                             std::vector<InterventionEvent>& events) {
  if (config_.kind != Kind::SoftShrinkPerturb) return;
  const Index touched = shrink_perturb(params, config_.soft_shrink_perturb_beta, rng_);
  events.push_back({epoch, round, config_.label(), touched});
}

void InterventionHooks::after_epoch(const nn::NetworkSpec& spec, Params& params, Adam& adam,
                                    const Tensor& eval_batch, int epoch, int round,
                                    std::vector<InterventionEvent>& events) {
  if (config_.kind != Kind::Redo || epoch % config_.redo_period != 0) return;
  const Index units = redo(spec, params, adam, eval_batch, config_.redo_tau, rng_);
  events.push_back({epoch, round, config_.label(), units});
}

void InterventionHooks::at_round_boundary(const nn::NetworkSpec& spec, Params& params, Adam& adam, int epoch,
                                          int round, std::vector<InterventionEvent>& events) {
  Index touched = 0;
  switch (config_.kind) {
    case Kind::ResetAll: touched = reset_all(spec, params, adam, rng_); break;
    case Kind::ResetFinal: touched = reset_final(params, adam, rng_); break;
    case Kind::ShrinkPerturb: touched = shrink_perturb(params, config_.shrink_perturb_beta, rng_); break;
    case Kind::PlasticityInjection:
      for (auto h : nn::kHeadNames) touched += plasticity_injection(params, adam, rng_, std::string(h));
      break;
    default: return;
  }
  events.push_back({epoch, round, config_.label(), touched});
}

}  // namespace plasticity::interventions
