#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "plasticity/harness/archive.hpp"
#include "plasticity/stats/glm.hpp"
#include "plasticity/stats/tests.hpp"

namespace plasticity::harness {

inline constexpr std::string_view kBaselineMethod = "reset_all";

inline constexpr std::array<std::string_view, 5> kMetricNames{"entropy", "weight_mag", "weight_diff", "grad_norm",
                                                               "dead_unit_fraction"};

/// Value of a named per-epoch field ("train_reward", "test_reward" or one of kMetricNames).
/// Returns nullopt for an unmeasured test reward; throws UsageError for unknown names.
std::optional<double> record_field(const diagnostics::MetricsRecord& r, std::string_view name);

/// Round-level rewards of one seed. Test entries are NaN for rounds without a measurement.
struct RoundRewards {
  std::vector<double> train_raw;
  std::vector<double> train_normalized;
  std::vector<double> test_raw;
  std::vector<double> test_normalized;
  std::vector<int> episodes;
};

/// Train: mean of the final `window` episode returns of each round, minus round 0's value.
/// Test: the last test measurement of each round, minus round 0's value.
RoundRewards round_rewards(const SeedArchive& seed, int n_rounds, std::size_t window);

enum class MetricNormalization { Ratio, Difference };

struct MethodSummary {
  std::string label;
  std::vector<double> train_final;  // per seed, normalized final-round reward
  std::vector<double> test_final;
  double train_mean = 0.0, train_se = 0.0;
  double test_mean = 0.0, test_se = 0.0;
  std::optional<stats::TTestResult> train_vs_baseline;
  std::optional<stats::TTestResult> test_vs_baseline;
};

/// One (method, seed) observation for the metric/reward association analysis.
struct MetricPoint {
  std::string method;
  int seed = 0;
  double train = 0.0;
  double test = 0.0;
  std::array<double, kMetricNames.size()> metrics{};  // final-round mean over its baseline
};

struct CorrelationRow {
  std::string metric;
  std::string target;  // "train" or "test"
  stats::Correlation result;
};

struct Analysis {
  std::vector<MethodSummary> methods;
  std::vector<MetricPoint> points;
  std::vector<CorrelationRow> correlations;
  std::optional<stats::GlmResult> glm_train;
  std::optional<stats::GlmResult> glm_test;
  std::vector<std::string> notes;
};

/// Per-method normalized final-round rewards (mean and standard error over seeds), Welch
/// tests against reset_all when present, Pearson correlations of each metric with reward and
/// Gaussian GLMs of reward on all five metrics. Each metric is summarized per seed as its
/// final-round mean divided by (or minus) its value in the first epoch.
Analysis analyze(const std::vector<MethodArchive>& archives,
                 MetricNormalization normalization = MetricNormalization::Ratio);

std::string format_analysis_text(const Analysis& a);

/// Writes rewards.csv, points.csv, correlations.csv, glm_{train,test}.{csv,txt} and
/// analysis.txt into `dir`. Returns the files written.
std::vector<fs::path> write_analysis(const Analysis& a, const fs::path& dir);

}  // namespace plasticity::harness
