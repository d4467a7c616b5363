#pragma once

#include <span>
#include <string>
#include <vector>

namespace plasticity::stats {

struct SampleSet {
  std::string label;
  std::vector<double> values;
};

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;          // two-sided
  double p_less = 0.5;     // one-sided, alternative mean(a) < mean(b)
  double p_greater = 0.5;  // one-sided, alternative mean(a) > mean(b)
};

/// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of freedom.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);
TTestResult welch_t_test(const SampleSet& a, const SampleSet& b);

/// Student's pooled-variance t-test (df = n_a + n_b - 2).
TTestResult pooled_t_test(std::span<const double> a, std::span<const double> b);

struct Correlation {
  double r = 0.0;
  double p = 1.0;  // two-sided, t = r sqrt((n - 2) / (1 - r^2)) on n - 2 df
  std::size_t n = 0;
};

Correlation pearson_r(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of average ranks; p-value from the same t approximation.
Correlation spearman_rho(std::span<const double> x, std::span<const double> y);

/// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> x);

double mean(std::span<const double> x);
/// Sample variance (n - 1 denominator).
double variance(std::span<const double> x);
double standard_error(std::span<const double> x);

}  // namespace plasticity::stats
