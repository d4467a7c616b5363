#include "plasticity/stats/tests.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "plasticity/errors.hpp"
#include "plasticity/stats/distributions.hpp"

namespace plasticity::stats {

double mean(std::span<const double> x) {
  if (x.empty()) throw StatisticsError("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw StatisticsError("variance needs at least two values");
  // Welford updates: exact zero for a constant sample.
  double m = 0.0, ss = 0.0;
  std::size_t k = 0;
  for (double v : x) {
    ++k;
    const double d = v - m;
    m += d / static_cast<double>(k);
    ss += d * (v - m);
  }
  return ss / static_cast<double>(x.size() - 1);
}

double standard_error(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  return std::sqrt(variance(x) / static_cast<double>(x.size()));
}

namespace {

TTestResult finish(double t, double df) {
  TTestResult r;
  r.t = t;
  r.df = df;
  r.p = student_t_two_sided_p(t, df);
  r.p_less = student_t_cdf(t, df);
  r.p_greater = student_t_cdf(-t, df);
  return r;
}

void require_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw StatisticsError("t-test needs at least two values per group");
}

}  // namespace

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  require_pair(a, b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = variance(a) / na;
  const double vb = variance(b) / nb;
  const double se2 = va + vb;
  if (!(se2 > 0.0)) throw StatisticsError("welch_t_test: both groups have zero variance");
  const double t = (mean(a) - mean(b)) / std::sqrt(se2);
  const double df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  return finish(t, df);
}

TTestResult welch_t_test(const SampleSet& a, const SampleSet& b) { return welch_t_test(a.values, b.values); }

TTestResult pooled_t_test(std::span<const double> a, std::span<const double> b) {
  require_pair(a, b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double df = na + nb - 2.0;
  const double sp2 = ((na - 1.0) * variance(a) + (nb - 1.0) * variance(b)) / df;
  if (!(sp2 > 0.0)) throw StatisticsError("pooled_t_test: zero pooled variance");
  const double t = (mean(a) - mean(b)) / std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
  return finish(t, df);
}

Correlation pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw StatisticsError("pearson_r: samples differ in length");
  if (x.size() < 3) throw StatisticsError("pearson_r: needs at least three pairs");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw StatisticsError("pearson_r: a variable has zero variance");
  Correlation c;
  c.n = x.size();
  c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(c.n) - 2.0;
  if (std::fabs(c.r) >= 1.0) {
    c.p = 0.0;
  } else {
    c.p = student_t_two_sided_p(c.r * std::sqrt(df / (1.0 - c.r * c.r)), df);
  }
  return c;
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

Correlation spearman_rho(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson_r(rx, ry);
}

}  // namespace plasticity::stats
