#include <gtest/gtest.h>

#include <cmath>

#include "plasticity/interventions/interventions.hpp"
#include "support.hpp"

using namespace plasticity;
using namespace plasticity::interventions;

namespace {

nn::Tensor<Real> scalar(double v) { return nn::Tensor<Real>::Constant(1, 1, v); }

nn::NetworkSpec small_spec(nn::Activation act = nn::Activation::Relu, bool ln = false) {
  nn::NetworkSpec s;
  s.input_dim = 10;
  s.hidden_dims = {12, 8};
  s.activation = act;
  s.use_layer_norm = ln;
  return s;
}

bool same(const nn::Tensor<Real>& a, const nn::Tensor<Real>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

nn::Tensor<Real> random_batch(const nn::NetworkSpec& spec, int n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  nn::Tensor<Real> x(n, spec.input_dim);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  return x;
}

}  // namespace

TEST(ShrinkPerturb, ScalarExample) {
  Params p;
  p.add_value("w", scalar(2.0), nn::constant_init(0.4));
  Rng rng(1);
  shrink_perturb(p, 0.5, rng);
  EXPECT_DOUBLE_EQ(p.value("w")(0, 0), 1.2);
}

TEST(ShrinkPerturb, BetaZeroAndOne) {
  auto spec = small_spec();
  Rng init(2);
  auto params = nn::init_parameters<Real>(spec, init);
  const auto before = params;
  Rng rng(3);
  shrink_perturb(params, 0.0, rng);
  EXPECT_TRUE(params == before);

  Rng a(4), b(4);
  shrink_perturb(params, 1.0, a);
  for (const auto& e : before.entries()) {
    const auto fresh = e.sampler.sample<Real>(e.current.rows(), e.current.cols(), b);
    EXPECT_TRUE(same(params.value(e.name), fresh)) << e.name;
  }
}

TEST(ShrinkPerturb, SoftHookMatchesDirectCall) {
  auto spec = small_spec(nn::Activation::Relu, true);
  Rng init(5);
  auto params = nn::init_parameters<Real>(spec, init);
  auto direct = params;
  InterventionConfig cfg;
  cfg.kind = Kind::SoftShrinkPerturb;
  InterventionHooks hooks(cfg, 77);
  std::vector<InterventionEvent> events;
  hooks.after_optimizer_step(params, 1, 0, events);
  Rng rng(77);
  shrink_perturb(direct, cfg.soft_shrink_perturb_beta, rng);
  EXPECT_TRUE(params == direct);
  ASSERT_EQ(events.size(), 1u);
  EXPECT_EQ(events[0].params_touched, params.parameter_count());
}

TEST(ShrinkPerturb, TinyBetaBarelyMoves) {
  Params p;
  Rng init(6);
  p.add("w", 50, 50, nn::fan_in_uniform(1), init);  // unit-scale entries
  const nn::Tensor<Real> before = p.value("w");
  Rng rng(7);
  shrink_perturb(p, 1e-6, rng);
  const nn::Tensor<Real>& after = p.value("w");
  for (Index i = 0; i < after.size(); ++i) {
    EXPECT_LE(std::fabs(after.data()[i] - before.data()[i]), 1e-5 * std::max(1.0, std::fabs(before.data()[i])));
  }
}

TEST(ShrinkPerturb, RepeatedCallsContractTowardInitScale) {
  // Scalar recursion w <- (1 - beta) w + beta f with |f| <= bound gives
  // |w_n| <= (1 - beta)^n |w_0| + (1 - (1 - beta)^n) bound, entrywise.
  const double beta = 0.1, bound = 1.0, w0 = 10.0;
  Params p;
  p.add_value("w", nn::Tensor<Real>::Constant(4, 5, w0), nn::fan_in_uniform(1, bound));
  Rng rng(8);
  for (int n = 1; n <= 60; ++n) {
    shrink_perturb(p, beta, rng);
    const double keep = std::pow(1.0 - beta, n);
    const double limit = keep * w0 + (1.0 - keep) * bound;
    EXPECT_LE(p.value("w").cwiseAbs().maxCoeff(), limit + 1e-12) << "after " << n;
  }
}

TEST(ShrinkPerturb, FrozenEntriesAreUntouched) {
  Params p;
  Rng init(9);
  p.add("live", 3, 3, nn::fan_in_uniform(3), init);
  p.add("frozen", 3, 3, nn::fan_in_uniform(3), init, false);
  const auto before = p.value("frozen");
  Rng rng(10);
  EXPECT_EQ(shrink_perturb(p, 0.5, rng), 9);
  EXPECT_TRUE(same(p.value("frozen"), before));
}

TEST(Penalties, RegenExamplesAndGradient) {
  Params p;
  p.add_value("w", scalar(1.0), nn::constant_init(0.0));
  EXPECT_EQ(regen_reg_loss(p, 0.5), 0.0);
  p.value("w")(0, 0) = 3.0;
  Grads g;
  EXPECT_DOUBLE_EQ(regen_reg_loss(p, 0.5, &g), 2.0);
  EXPECT_DOUBLE_EQ(g.at("w")(0, 0), 2.0 * 0.5 * (3.0 - 1.0));
}

TEST(Penalties, L2ExamplesAndIdentityWithRegen) {
  Params p;
  p.add_value("w", scalar(0.0), nn::constant_init(0.0));
  EXPECT_EQ(l2_loss(p, 1e-3), 0.0);
  p.value("w")(0, 0) = 2.0;
  EXPECT_DOUBLE_EQ(l2_loss(p, 1e-3), 4e-3);

  Params q;
  Rng rng(11);
  q.add_value("a", nn::Tensor<Real>::Zero(3, 4), nn::constant_init(0.0));
  q.add_value("b", nn::Tensor<Real>::Zero(1, 4), nn::constant_init(0.0));
  std::normal_distribution<double> n(0, 1);
  for (auto& e : q.entries()) {
    for (Index i = 0; i < e.current.size(); ++i) e.current.data()[i] = n(rng);
  }
  for (bool sq : {true, false}) {
    Grads gl, gr;
    EXPECT_DOUBLE_EQ(l2_loss(q, 0.3, &gl, sq), regen_reg_loss(q, 0.3, &gr, sq));
    for (const auto& e : q.entries()) EXPECT_TRUE(same(gl.at(e.name), gr.at(e.name)));
  }
}

TEST(Penalties, GradientsMatchFiniteDifferences) {
  auto spec = small_spec(nn::Activation::Crelu, true);
  Rng rng(12);
  auto params = nn::init_parameters<Real>(spec, rng);
  shrink_perturb(params, 0.3, rng);  // move away from the snapshot
  for (auto kind : {PenaltyKind::L2, PenaltyKind::Regen}) {
    for (bool sq : {true, false}) {
      const Penalty pen{kind, 0.7, sq};
      Grads g;
      penalty_loss(pen, params, &g);
      const auto check =
          testing_support::check_gradients(params, g, [&] { return penalty_loss(pen, params, nullptr); });
      EXPECT_LT(check.max_rel_error, 1e-4) << check.worst;
    }
  }
}

TEST(ResetFinal, OnlyHeadsChange) {
  auto spec = small_spec(nn::Activation::Relu, true);
  Rng init(13);
  auto params = nn::init_parameters<Real>(spec, init);
  Adam adam;
  Grads g;
  for (const auto& e : params.entries()) g[e.name] = nn::Tensor<Real>::Ones(e.current.rows(), e.current.cols());
  nn::adam_step(params, g, adam);
  const auto before = params;
  Rng rng(14);
  reset_final(params, adam, rng);
  for (const auto& e : params.entries()) {
    const bool head = e.name.rfind("policy", 0) == 0 || e.name.rfind("value", 0) == 0;
    if (head) {
      EXPECT_FALSE(same(e.current, before.value(e.name))) << e.name;
      EXPECT_EQ(adam.moments.count(e.name), 0u);
    } else {
      EXPECT_TRUE(same(e.current, before.value(e.name))) << e.name;
      EXPECT_EQ(adam.moments.count(e.name), 1u);
    }
  }
  const auto first = params;
  reset_final(params, adam, rng);
  EXPECT_FALSE(same(params.value("policy.weight"), first.value("policy.weight")));
}

TEST(ResetAll, MatchesFreshNetworkAndClearsOptimizer) {
  auto spec = small_spec();
  Rng init(15);
  auto params = nn::init_parameters<Real>(spec, init);
  Adam adam;
  Grads g;
  for (const auto& e : params.entries()) g[e.name] = nn::Tensor<Real>::Ones(e.current.rows(), e.current.cols());
  nn::adam_step(params, g, adam);
  nn::adam_step(params, g, adam);
  Rng rng(16), twin(16);
  reset_all(spec, params, adam, rng);
  EXPECT_TRUE(adam.moments.empty());
  EXPECT_EQ(adam.step, 0);
  EXPECT_TRUE(params == nn::init_parameters<Real>(spec, twin));
}

TEST(ResetAll, DrawsMatchInitDistributionMoments) {
  nn::NetworkSpec spec;  // 484 -> 256 -> 256
  Rng init(17);
  auto params = nn::init_parameters<Real>(spec, init);
  Adam adam;
  Rng rng(18);
  reset_all(spec, params, adam, rng);
  const auto& e = params.at("hidden0.weight");
  const double n = static_cast<double>(e.current.size());
  ASSERT_GE(n, 1e4);
  const double b = e.sampler.bound();
  const double var = b * b / 3.0;
  const double mean = e.current.mean();
  const double sample_var = (e.current.array() - mean).square().sum() / (n - 1.0);
  // Standard errors of the mean and of the variance for U(-b, b).
  EXPECT_LT(std::fabs(mean), 3.0 * std::sqrt(var / n));
  EXPECT_LT(std::fabs(sample_var - var), 3.0 * std::sqrt((b * b * b * b / 5.0 - var * var) / n));
  EXPECT_LE(e.current.cwiseAbs().maxCoeff(), b);
}

TEST(Injection, OutputsUnchangedAndFrozenPartsGetNoGradient) {
  auto spec = small_spec(nn::Activation::Relu, true);
  Rng rng(19);
  auto params = nn::init_parameters<Real>(spec, rng);
  Adam adam;
  const auto x = random_batch(spec, 16, rng);
  const auto before = nn::forward(spec, params, x, false);
  for (auto h : nn::kHeadNames) plasticity_injection(params, adam, rng, std::string(h));
  const auto after = nn::forward(spec, params, x);
  EXPECT_TRUE(same(before.logits, after.logits));
  EXPECT_TRUE(same(before.values, after.values));

  nn::Tensor<Real> dl = nn::Tensor<Real>::Random(16, spec.n_actions);
  nn::Tensor<Real> dv = nn::Tensor<Real>::Random(16, 1);
  const auto g = nn::backward(spec, params, after, dl, dv);
  for (auto h : nn::kHeadNames) {
    const std::string head(h);
    for (const auto& n : {head + ".weight", head + ".bias", head + ".inject_b.weight", head + ".inject_b.bias"}) {
      EXPECT_FALSE(params.at(n).trainable) << n;
      EXPECT_TRUE((g.at(n).array() == 0.0).all()) << n;
    }
    EXPECT_GT(g.at(head + ".inject_a.weight").cwiseAbs().maxCoeff(), 0.0);
  }
  const auto check = testing_support::check_gradients(params, g, [&] {
    const auto f = nn::forward(spec, params, x, false);
    return f.logits.cwiseProduct(dl).sum() + f.values.cwiseProduct(dv).sum();
  });
  EXPECT_LT(check.max_rel_error, 1e-4) << check.worst;
}

TEST(Injection, RepeatedInjectionFoldsIntoOneFrozenSet) {
  auto spec = small_spec();
  Rng rng(20);
  auto params = nn::init_parameters<Real>(spec, rng);
  Adam adam;
  const auto x = random_batch(spec, 8, rng);
  plasticity_injection(params, adam, rng, "policy");
  const Index count_once = params.parameter_count();
  const std::size_t entries_once = params.entries().size();
  // Train the live copy a little so folding has something to absorb.
  params.value("policy.inject_a.weight").array() += 0.05;
  params.value("policy.inject_a.bias").array() -= 0.02;
  const auto before = nn::forward(spec, params, x, false);
  plasticity_injection(params, adam, rng, "policy");
  const auto after = nn::forward(spec, params, x, false);
  EXPECT_EQ(params.parameter_count(), count_once);
  EXPECT_EQ(params.entries().size(), entries_once);
  EXPECT_LT((before.logits - after.logits).cwiseAbs().maxCoeff(), 1e-12);

  const Index h = spec.hidden_dims.back();
  const Index one_set = h * spec.n_actions + spec.n_actions;
  Index head_params = 0;
  for (const auto& e : params.entries()) {
    if (e.name.rfind("policy", 0) == 0) head_params += e.current.size();
  }
  EXPECT_EQ(head_params, 3 * one_set);  // frozen fold + live copy + its stop-gradient twin
}

TEST(Injection, RejectsNonHeadLayer) {
  auto spec = small_spec();
  Rng rng(21);
  auto params = nn::init_parameters<Real>(spec, rng);
  Adam adam;
  EXPECT_THROW(plasticity_injection(params, adam, rng, "hidden0"), UsageError);
}

TEST(Redo, ForcedDeadUnitIsResetAndOutputUnchanged) {
  auto spec = small_spec();
  Rng rng(22);
  auto params = nn::init_parameters<Real>(spec, rng);
  params.value("hidden0.weight").col(3).setZero();
  params.value("hidden0.bias")(0, 3) = -1.0;
  const auto x = random_batch(spec, 64, rng);
  const auto scores = dormancy_scores(spec, params, x);
  EXPECT_EQ(scores[0][3], 0.0);

  Adam adam;
  const auto before = nn::forward(spec, params, x, false);
  const Index reset = redo(spec, params, adam, x, 0.025, rng);
  EXPECT_GE(reset, 1);
  EXPECT_GT(params.value("hidden0.weight").col(3).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE((params.value("hidden1.weight").row(3).array() == 0.0).all());
  const auto after = nn::forward(spec, params, x, false);
  EXPECT_LT((before.logits - after.logits).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((before.values - after.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Redo, EquallyActiveUnitsAreKept) {
  nn::NetworkSpec spec;
  spec.input_dim = 3;
  spec.hidden_dims = {4};
  Rng rng(23);
  auto params = nn::init_parameters<Real>(spec, rng);
  params.value("hidden0.weight").setZero();
  params.value("hidden0.bias").setConstant(0.5);
  const auto x = random_batch(spec, 10, rng);
  const auto scores = dormancy_scores(spec, params, x);
  for (double s : scores[0]) EXPECT_DOUBLE_EQ(s, 1.0);
  const auto before = params;
  Adam adam;
  EXPECT_EQ(redo(spec, params, adam, x, 0.025, rng), 0);
  EXPECT_TRUE(params == before);
}

TEST(Hooks, FireOnlyWhereConfigured) {
  auto spec = small_spec();
  Rng rng(24);
  auto params = nn::init_parameters<Real>(spec, rng);
  const auto x = random_batch(spec, 8, rng);
  Adam adam;
  std::vector<InterventionEvent> events;

  InterventionHooks warm({}, 1);
  warm.after_optimizer_step(params, 1, 0, events);
  for (int e = 1; e <= 20; ++e) warm.after_epoch(spec, params, adam, x, e, 0, events);
  warm.at_round_boundary(spec, params, adam, 20, 0, events);
  EXPECT_TRUE(events.empty());

  InterventionConfig redo_cfg;
  redo_cfg.kind = Kind::Redo;
  InterventionHooks redo_hooks(redo_cfg, 2);
  for (int e = 1; e <= 25; ++e) redo_hooks.after_epoch(spec, params, adam, x, e, 0, events);
  redo_hooks.at_round_boundary(spec, params, adam, 25, 0, events);
  ASSERT_EQ(events.size(), 2u);
  EXPECT_EQ(events[0].epoch, 10);
  EXPECT_EQ(events[1].epoch, 20);

  events.clear();
  InterventionHooks reset_hooks(InterventionConfig::from_label("reset_all"), 3);
  reset_hooks.at_round_boundary(spec, params, adam, 5, 0, events);
  ASSERT_EQ(events.size(), 1u);
  EXPECT_EQ(events[0].kind, "reset_all");
  EXPECT_EQ(events[0].params_touched, params.parameter_count());
}

TEST(Hooks, ArchitectureAndPenaltySelection) {
  const auto crelu = InterventionHooks(InterventionConfig::from_label("crelu"), 1).architecture({});
  EXPECT_EQ(crelu.activation, nn::Activation::Crelu);
  const auto regen_ln = InterventionHooks(InterventionConfig::from_label("regen_reg+ln"), 1);
  EXPECT_TRUE(regen_ln.architecture({}).use_layer_norm);
  EXPECT_EQ(regen_ln.penalty().kind, PenaltyKind::Regen);
  EXPECT_EQ(regen_ln.penalty().alpha, 1e-4);
  EXPECT_EQ(InterventionHooks({}, 1).penalty().kind, PenaltyKind::None);
  EXPECT_EQ(InterventionConfig::from_label("regen_reg+ln").label(), "regen_reg+ln");
  EXPECT_ANY_THROW(InterventionConfig::from_label("dropout"));
}
