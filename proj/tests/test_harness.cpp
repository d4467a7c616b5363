#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <regex>
#include <set>

#include "plasticity/harness/analyze.hpp"
#include "plasticity/harness/archive.hpp"
#include "plasticity/harness/config.hpp"
#include "plasticity/harness/experiment.hpp"
#include "plasticity/harness/plot.hpp"
#include "plasticity/ppo/trainer.hpp"
#include "plasticity/stats/tests.hpp"

using namespace plasticity;
using namespace plasticity::harness;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("plasticity_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig smoke_config(const fs::path& out) {
  ExperimentConfig c;
  c.methods = {"warm_start", "reset_all"};
  c.n_rounds = 2;
  c.k = 4;
  c.iterations_per_round = 200;
  c.n_seeds = 2;
  c.n_test = 4;
  c.test_episodes = 4;
  c.eval_batch = 64;
  c.network.hidden_dims = {32, 32};
  c.output_dir = out.string();
  return c;
}

// Synthetic archive: `per_round` epochs per round, each with a handful of episodes.
MethodArchive synthetic(const std::string& label, int n_seeds, int n_rounds, int per_round, std::uint64_t seed,
                        bool identical_seeds = false) {
  MethodArchive m;
  m.label = label;
  m.dir = "/synthetic/" + label;
  m.config.methods = {label};
  m.config.n_rounds = n_rounds;
  m.config.reward_window = 5;
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int s = 0; s < n_seeds; ++s) {
    if (identical_seeds) rng.seed(seed);
    SeedArchive sa;
    sa.seed = s;
    int epoch = 0;
    for (int r = 0; r < n_rounds; ++r) {
      for (int e = 0; e < per_round; ++e) {
        diagnostics::MetricsRecord rec;
        rec.epoch = ++epoch;
        rec.round = r;
        for (int k = 0; k < 3; ++k) rec.episode_returns.push_back(4.0 * u(rng) - 1.0);
        rec.train_reward = stats::mean(rec.episode_returns);
        if (e + 1 == per_round) rec.test_reward = 4.0 * u(rng) - 1.0;
        rec.entropy = 0.5 + u(rng);
        rec.weight_mag = 10.0 + u(rng) + r;
        rec.weight_diff = 0.1 + 0.1 * u(rng);
        rec.grad_norm = 1.0 + u(rng);
        rec.dead_unit_fraction = 0.1 * u(rng);
        sa.records.push_back(rec);
      }
    }
    m.seeds.push_back(sa);
  }
  return m;
}

std::string slurp(const fs::path& p) { return read_file(p); }

}  // namespace

TEST(Config, FormatParseRoundTrip) {
  ExperimentConfig c;
  c.methods = {"soft_shrink_perturb+ln", "regen_reg", "reset_all"};
  c.protocol = shift::Protocol::Expand;
  c.k = 17;
  c.master_seed = 12345678901234ull;
  c.ppo.learning_rate = 3.3e-4;
  c.network.hidden_dims = {64, 32, 16};
  c.network.activation = nn::Activation::Crelu;
  c.intervention.regen_alpha = 2.5e-5;
  const auto back = parse_config(format_config(c));
  EXPECT_EQ(back.entries(), c.entries());
  EXPECT_EQ(format_config(back), format_config(c));
}

TEST(Config, SetAndValidate) {
  ExperimentConfig c;
  c.set("experiment.k", "7");
  c.set("ppo.learning_rate", "0.001");
  c.set("interventions.redo_tau", "0.1");
  EXPECT_EQ(c.k, 7);
  EXPECT_EQ(c.ppo.learning_rate, 0.001);
  EXPECT_EQ(c.method("redo").redo_tau, 0.1);
  EXPECT_THROW(c.set("ppo.momentum", "0.9"), ConfigError);
  EXPECT_THROW(c.set("experiment.k", "many"), ConfigError);
  EXPECT_THROW(parse_config("[experiment]\nbogus = 1\n"), ConfigError);
  c.methods = {"warm_start", "warm_start"};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, DerivedSeedsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (int s = 0; s < 20; ++s) {
    for (auto p : {Stream::Plan, Stream::Init, Stream::Rollout, Stream::Shuffle, Stream::Diagnostics,
                   Stream::Intervention, Stream::Test}) {
      EXPECT_TRUE(seen.insert(derive_seed(0, s, p)).second);
    }
  }
  EXPECT_EQ(derive_seed(3, 1, Stream::Init), derive_seed(3, 1, Stream::Init));
  EXPECT_NE(derive_seed(3, 1, Stream::Init), derive_seed(4, 1, Stream::Init));
}

TEST(Archive, MetricsLineRoundTrip) {
  diagnostics::MetricsRecord r;
  r.epoch = 3;
  r.round = 1;
  r.train_reward = 0.1 + 0.2;
  r.episode_returns = {1.0, -1.0, 0.3};
  r.entropy = 1.2345678901234567;
  r.weight_mag = 42.0;
  const auto line = metrics_line(r);
  EXPECT_EQ(line.find("\"epoch\""), 1u);
  EXPECT_NE(line.find("\"test_reward\":null"), std::string::npos);
  const auto back = parse_metrics_line(line);
  EXPECT_EQ(back.train_reward, r.train_reward);
  EXPECT_EQ(back.entropy, r.entropy);
  EXPECT_EQ(back.episode_returns, r.episode_returns);
  EXPECT_FALSE(back.test_reward.has_value());
  r.test_reward = 0.5;
  EXPECT_EQ(parse_metrics_line(metrics_line(r)).test_reward, 0.5);
}

TEST(Experiment, SmokeRunWritesCompleteArchive) {
  const auto out = scratch("smoke");
  const auto c = smoke_config(out);
  const auto archives = run_experiment(c);
  const int per_round = ppo::PpoTrainer::epochs_per_round(c.ppo, c.iterations_per_round);
  ASSERT_GE(per_round, 1);
  ASSERT_EQ(archives.size(), 2u);
  for (const auto& m : archives) {
    EXPECT_TRUE(fs::exists(m.dir / "config.snapshot"));
    EXPECT_TRUE(fs::exists(m.dir / "summary" / "rounds.csv"));
    const auto loaded = load_archive(m.dir);
    ASSERT_EQ(loaded.seeds.size(), 2u);
    for (const auto& s : loaded.seeds) {
      ASSERT_EQ(s.records.size(), static_cast<std::size_t>(c.n_rounds * per_round));
      EXPECT_TRUE(fs::exists(m.dir / ("seed_" + std::to_string(s.seed)) / "permutations.txt"));
      for (int r = 0; r < c.n_rounds; ++r) {
        EXPECT_TRUE(s.records[static_cast<std::size_t>((r + 1) * per_round - 1)].test_reward.has_value());
      }
    }
  }
  const auto reloaded = load_archives({out});
  ASSERT_EQ(reloaded.size(), 2u);
  EXPECT_EQ(reloaded[0].label, "warm_start");
  EXPECT_EQ(reloaded[1].label, "reset_all");
  ASSERT_EQ(reloaded[1].seeds[0].events.size(), 1u);  // one boundary between two rounds
  EXPECT_TRUE(reloaded[0].seeds[0].events.empty());

  EXPECT_THROW(run_experiment(c), IoError);
  RunOptions replace;
  replace.overwrite = true;
  EXPECT_NO_THROW(run_experiment(c, replace));
}

TEST(Experiment, ThreadCountDoesNotChangeOutput) {
  auto c = smoke_config(scratch("threads_1"));
  run_experiment(c);
  const auto one = c.output_dir;
  c.output_dir = scratch("threads_3").string();
  RunOptions opts;
  opts.threads = 3;
  run_experiment(c, opts);
  for (const auto& method : c.methods) {
    for (int s = 0; s < c.n_seeds; ++s) {
      const auto rel = fs::path(method) / ("seed_" + std::to_string(s));
      EXPECT_EQ(slurp(fs::path(one) / rel / "metrics.ldj"), slurp(fs::path(c.output_dir) / rel / "metrics.ldj"));
      EXPECT_EQ(slurp(fs::path(one) / rel / "events.ldj"), slurp(fs::path(c.output_dir) / rel / "events.ldj"));
    }
  }
}

TEST(Experiment, RerunFromSnapshotIsBitIdentical) {
  const auto out = scratch("resume");
  auto c = smoke_config(out);
  c.methods = {"soft_shrink_perturb"};
  c.n_seeds = 1;
  run_experiment(c);
  auto again = load_config(out / "soft_shrink_perturb" / "config.snapshot");
  again.output_dir = scratch("resume_again").string();
  run_experiment(again);
  EXPECT_EQ(slurp(out / "soft_shrink_perturb" / "seed_0" / "metrics.ldj"),
            slurp(fs::path(again.output_dir) / "soft_shrink_perturb" / "seed_0" / "metrics.ldj"));
}

TEST(Experiment, SingleRoundWarmStartEqualsResetAll) {
  auto c = smoke_config(scratch("single_round"));
  c.n_rounds = 1;
  c.n_seeds = 1;
  const auto archives = run_experiment(c);
  EXPECT_EQ(slurp(archives[0].dir / "seed_0" / "metrics.ldj"), slurp(archives[1].dir / "seed_0" / "metrics.ldj"));
}

TEST(Analyze, SummaryMatchesRecomputation) {
  const std::vector<MethodArchive> archives{synthetic("warm_start", 4, 3, 4, 1), synthetic("reset_all", 4, 3, 4, 2)};
  const auto a = analyze(archives);
  ASSERT_EQ(a.methods.size(), 2u);
  for (std::size_t m = 0; m < archives.size(); ++m) {
    std::vector<double> finals;
    for (const auto& s : archives[m].seeds) {
      std::vector<double> first, last;
      for (const auto& rec : s.records) {
        auto& bucket = rec.round == 0 ? first : last;
        if (rec.round == 0 || rec.round == 2) bucket.insert(bucket.end(), rec.episode_returns.begin(), rec.episode_returns.end());
      }
      const auto tail_mean = [](const std::vector<double>& v) {
        double sum = 0.0;
        for (std::size_t i = v.size() - 5; i < v.size(); ++i) sum += v[i];
        return sum / 5.0;
      };
      finals.push_back(tail_mean(last) - tail_mean(first));
    }
    double mean = 0.0;
    for (double f : finals) mean += f / finals.size();
    double ss = 0.0;
    for (double f : finals) ss += (f - mean) * (f - mean);
    EXPECT_NEAR(a.methods[m].train_mean, mean, 1e-12);
    EXPECT_NEAR(a.methods[m].train_se, std::sqrt(ss / (finals.size() - 1) / finals.size()), 1e-12);
  }
  ASSERT_TRUE(a.methods[1].train_vs_baseline.has_value());
  EXPECT_EQ(a.methods[1].train_vs_baseline->t, 0.0);
  EXPECT_NEAR(a.methods[1].train_vs_baseline->p, 1.0, 1e-15);
  const auto welch = stats::welch_t_test(a.methods[0].train_final, a.methods[1].train_final);
  EXPECT_EQ(a.methods[0].train_vs_baseline->t, welch.t);
  EXPECT_EQ(a.points.size(), 8u);
  EXPECT_EQ(a.correlations.size(), 2 * kMetricNames.size());
  EXPECT_TRUE(a.glm_train.has_value());
  EXPECT_EQ(a.glm_train->n_obs, 8);
}

TEST(Analyze, IdenticalSeedsHaveZeroStandardError) {
  const auto a = analyze({synthetic("warm_start", 3, 2, 3, 9, true)});
  EXPECT_EQ(a.methods[0].train_se, 0.0);
  EXPECT_EQ(a.methods[0].test_se, 0.0);
  EXPECT_FALSE(a.methods[0].train_vs_baseline.has_value());
}

TEST(Analyze, WritesTables) {
  const auto dir = scratch("analysis");
  const auto a = analyze({synthetic("warm_start", 4, 3, 4, 1), synthetic("reset_all", 4, 3, 4, 2)});
  const auto files = write_analysis(a, dir);
  for (const auto* name : {"rewards.csv", "points.csv", "correlations.csv", "glm_train.csv", "glm_train.txt",
                           "analysis.txt"}) {
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  }
  EXPECT_FALSE(files.empty());
}

TEST(Plot, EmptyMetricSelectionWritesNothing) {
  const auto dir = scratch("plot_empty") / "figures";
  PlotOptions opts;
  opts.kind = PlotKind::MetricCurve;
  EXPECT_THROW(plot({synthetic("warm_start", 2, 3, 2, 1)}, opts, dir), UsageError);
  EXPECT_FALSE(fs::exists(dir));
  EXPECT_THROW(plot({}, PlotOptions{}, dir), UsageError);
}

TEST(Plot, RoundCurveHasOneSeriesPerMethodWithOnePointPerRound) {
  const std::vector<MethodArchive> archives{synthetic("warm_start", 3, 3, 2, 1), synthetic("reset_all", 3, 3, 2, 2)};
  PlotOptions opts;
  opts.kind = PlotKind::RoundCurve;
  const auto svg = render_svg(archives, opts);
  const std::regex series(R"re(<polyline class="series" data-method="([^"]+)" points="([^"]*)")re");
  int count = 0;
  std::set<std::string> methods;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), series); it != std::sregex_iterator(); ++it) {
    ++count;
    methods.insert((*it)[1]);
    const std::string pts = (*it)[2];
    EXPECT_EQ(std::count(pts.begin(), pts.end(), ','), 3) << pts;
  }
  EXPECT_EQ(count, 2);
  EXPECT_EQ(methods, (std::set<std::string>{"warm_start", "reset_all"}));
}

TEST(Plot, OutputIsByteIdenticalAndMarksRoundEnds) {
  const std::vector<MethodArchive> archives{synthetic("warm_start", 2, 3, 4, 1)};
  const auto a = scratch("plot_a"), b = scratch("plot_b");
  PlotOptions opts;
  const auto fa = plot(archives, opts, a);
  const auto fb = plot(archives, opts, b);
  ASSERT_EQ(fa.size(), 1u);
  EXPECT_EQ(slurp(fa[0]), slurp(fb[0]));
  const auto svg = slurp(fa[0]);
  std::size_t boundaries = 0;
  for (std::size_t pos = 0; (pos = svg.find("class=\"round-boundary\"", pos)) != std::string::npos; ++pos) ++boundaries;
  EXPECT_EQ(boundaries, 2u);
  opts.kind = PlotKind::CorrelationScatter;
  opts.metrics = {"weight_mag", "entropy"};
  EXPECT_EQ(plot(archives, opts, a).size(), 1u);
  opts.metrics = {"charisma"};
  EXPECT_THROW(plot(archives, opts, a), UsageError);
}
