#include "plasticity/harness/analyze.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "plasticity/errors.hpp"

namespace plasticity::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) { return std::isnan(v) ? std::string() : fmt::format("{}", v); }

std::vector<double> finite_only(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v) {
    if (std::isfinite(x)) out.push_back(x);
  }
  return out;
}

}  // namespace

std::optional<double> record_field(const diagnostics::MetricsRecord& r, std::string_view name) {
  if (name == "train_reward") return r.train_reward;
  if (name == "test_reward") return r.test_reward;
  if (name == "entropy") return r.entropy;
  if (name == "weight_mag") return r.weight_mag;
  if (name == "weight_diff") return r.weight_diff;
  if (name == "grad_norm") return r.grad_norm;
  if (name == "dead_unit_fraction") return r.dead_unit_fraction;
  throw UsageError("unknown metric '" + std::string(name) + "'");
}

RoundRewards round_rewards(const SeedArchive& seed, int n_rounds, std::size_t window) {
  const auto nr = static_cast<std::size_t>(n_rounds);
  std::vector<std::vector<double>> episodes(nr);
  RoundRewards out;
  out.test_raw.assign(nr, kNaN);
  for (const auto& rec : seed.records) {
    if (rec.round < 0 || rec.round >= n_rounds) throw IoError("metrics record with out-of-range round");
    auto& ep = episodes[static_cast<std::size_t>(rec.round)];
    ep.insert(ep.end(), rec.episode_returns.begin(), rec.episode_returns.end());
    if (rec.test_reward) out.test_raw[static_cast<std::size_t>(rec.round)] = *rec.test_reward;
  }
  for (const auto& ep : episodes) out.episodes.push_back(static_cast<int>(ep.size()));
  const auto norm = diagnostics::normalized_reward(episodes, window);
  out.train_raw = norm.raw;
  out.train_normalized = norm.values;
  for (double t : out.test_raw) out.test_normalized.push_back(t - out.test_raw.front());
  return out;
}

Analysis analyze(const std::vector<MethodArchive>& archives, MetricNormalization normalization) {
  if (archives.empty()) throw UsageError("analyze: no archives");
  Analysis a;

  for (const auto& arch : archives) {
    if (arch.seeds.empty()) throw UsageError("analyze: archive " + arch.dir.string() + " has no seeds");
    const int nr = arch.config.n_rounds;
    const auto final_round = static_cast<std::size_t>(nr - 1);
    MethodSummary ms;
    ms.label = arch.label;
    for (const auto& s : arch.seeds) {
      if (s.records.empty()) throw UsageError("analyze: " + arch.label + " seed " + std::to_string(s.seed) + " is empty");
      const auto window = static_cast<std::size_t>(arch.config.reward_window);
      const auto rr = round_rewards(s, nr, window);
      for (int r = 0; r < nr; ++r) {
        if (rr.episodes[static_cast<std::size_t>(r)] < arch.config.reward_window) {
          a.notes.push_back(fmt::format("{} seed {} round {}: only {} episodes (< {}), all used", arch.label, s.seed, r,
                                        rr.episodes[static_cast<std::size_t>(r)], window));
        }
      }
      ms.train_final.push_back(rr.train_normalized[final_round]);
      ms.test_final.push_back(rr.test_normalized[final_round]);

      MetricPoint pt;
      pt.method = arch.label;
      pt.seed = s.seed;
      pt.train = rr.train_normalized[final_round];
      pt.test = rr.test_normalized[final_round];
      const auto& first = s.records.front();
      for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
        double sum = 0.0;
        int count = 0;
        for (const auto& rec : s.records) {
          if (rec.round == nr - 1) {
            sum += *record_field(rec, kMetricNames[m]);
            ++count;
          }
        }
        const double final_mean = count > 0 ? sum / count : kNaN;
        const double base = *record_field(first, kMetricNames[m]);
        if (normalization == MetricNormalization::Ratio && std::fabs(base) > 1e-12) {
          pt.metrics[m] = final_mean / base;
        } else {
          if (normalization == MetricNormalization::Ratio) {
            a.notes.push_back(fmt::format("{} seed {}: {} baseline is 0, difference used instead of ratio", arch.label,
                                          s.seed, kMetricNames[m]));
          }
          pt.metrics[m] = final_mean - base;
        }
      }
      a.points.push_back(pt);
    }
    const auto train = finite_only(ms.train_final);
    const auto test = finite_only(ms.test_final);
    if (!train.empty()) {
      ms.train_mean = stats::mean(train);
      ms.train_se = stats::standard_error(train);
    }
    if (!test.empty()) {
      ms.test_mean = stats::mean(test);
      ms.test_se = stats::standard_error(test);
    }
    a.methods.push_back(std::move(ms));
  }

  const MethodSummary* baseline = nullptr;
  for (const auto& m : a.methods) {
    if (m.label == kBaselineMethod) baseline = &m;
  }
  if (baseline == nullptr) {
    a.notes.emplace_back("no reset_all archive; t-tests skipped");
  } else {
    for (auto& m : a.methods) {
      try {
        m.train_vs_baseline = stats::welch_t_test(finite_only(m.train_final), finite_only(baseline->train_final));
      } catch (const StatisticsError& e) {
        a.notes.push_back(m.label + " train t-test: " + e.what());
      }
      try {
        m.test_vs_baseline = stats::welch_t_test(finite_only(m.test_final), finite_only(baseline->test_final));
      } catch (const StatisticsError& e) {
        a.notes.push_back(m.label + " test t-test: " + e.what());
      }
    }
  }

  for (const std::string target : {"train", "test"}) {
    std::vector<double> y;
    for (const auto& p : a.points) y.push_back(target == "train" ? p.train : p.test);
    for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
      std::vector<double> xs, ys;
      for (std::size_t i = 0; i < a.points.size(); ++i) {
        if (std::isfinite(a.points[i].metrics[m]) && std::isfinite(y[i])) {
          xs.push_back(a.points[i].metrics[m]);
          ys.push_back(y[i]);
        }
      }
      try {
        a.correlations.push_back({std::string(kMetricNames[m]), target, stats::pearson_r(xs, ys)});
      } catch (const StatisticsError& e) {
        a.notes.push_back(fmt::format("correlation {} vs {} reward: {}", kMetricNames[m], target, e.what()));
      }
    }

    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < a.points.size(); ++i) {
      bool ok = std::isfinite(y[i]);
      for (double v : a.points[i].metrics) ok = ok && std::isfinite(v);
      if (ok) rows.push_back(i);
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kMetricNames.size()));
    Eigen::VectorXd yv(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      yv(ri) = y[rows[r]];
      for (std::size_t m = 0; m < kMetricNames.size(); ++m) x(ri, static_cast<Eigen::Index>(m)) = a.points[rows[r]].metrics[m];
    }
    std::vector<std::string> names{"const"};
    for (auto n : kMetricNames) names.emplace_back(n);
    try {
      auto fit = stats::glm_gaussian(stats::add_intercept(x), yv, names);
      (target == "train" ? a.glm_train : a.glm_test) = std::move(fit);
    } catch (const StatisticsError& e) {
      a.notes.push_back(fmt::format("GLM for {} reward skipped: {}", target, e.what()));
    }
  }
  return a;
}

namespace {

std::string rewards_csv(const Analysis& a) {
  std::string s =
      "method,n,train_mean,train_se,test_mean,test_se,train_t,train_df,train_p,train_p_less,test_t,test_df,test_p,"
      "test_p_less\n";
  for (const auto& m : a.methods) {
    const auto& tr = m.train_vs_baseline;
    const auto& te = m.test_vs_baseline;
    s += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", m.label, m.train_final.size(), num(m.train_mean),
                     num(m.train_se), num(m.test_mean), num(m.test_se), tr ? num(tr->t) : "", tr ? num(tr->df) : "",
                     tr ? num(tr->p) : "", tr ? num(tr->p_less) : "", te ? num(te->t) : "", te ? num(te->df) : "",
                     te ? num(te->p) : "", te ? num(te->p_less) : "");
  }
  return s;
}

std::string points_csv(const Analysis& a) {
  std::string s = "method,seed,train,test";
  for (auto n : kMetricNames) s += fmt::format(",{}", n);
  s += '\n';
  for (const auto& p : a.points) {
    s += fmt::format("{},{},{},{}", p.method, p.seed, num(p.train), num(p.test));
    for (double v : p.metrics) s += "," + num(v);
    s += '\n';
  }
  return s;
}

std::string correlations_csv(const Analysis& a) {
  std::string s = "metric,target,r,p,n\n";
  for (const auto& c : a.correlations) {
    s += fmt::format("{},{},{},{},{}\n", c.metric, c.target, num(c.result.r), num(c.result.p), c.result.n);
  }
  return s;
}

std::string fmt_test(const std::optional<stats::TTestResult>& t) {
  if (!t) return fmt::format("{:>24}", "-");
  return fmt::format("t({:.1f}) = {:7.3f}  p = {:.3g}", t->df, t->t, t->p);
}

}  // namespace

std::string format_analysis_text(const Analysis& a) {
  std::ostringstream os;
  std::size_t w = 8;
  for (const auto& m : a.methods) w = std::max(w, m.label.size() + 2);
  os << "Normalized final-round reward (mean +/- standard error over seeds); Welch t-test vs reset_all\n";
  os << fmt::format("{:<{}} {:>3} {:>19} {:>19}   {:<30} {:<30}\n", "method", w, "n", "train", "test", "train vs reset_all",
                    "test vs reset_all");
  for (const auto& m : a.methods) {
    os << fmt::format("{:<{}} {:>3} {:>9.3f} +/- {:<6.3f}{:>9.3f} +/- {:<6.3f}   {:<30} {:<30}\n", m.label, w,
                      m.train_final.size(), m.train_mean, m.train_se, m.test_mean, m.test_se,
                      fmt_test(m.train_vs_baseline), fmt_test(m.test_vs_baseline));
  }
  os << "\nPearson correlation of normalized metrics with normalized final-round reward (* p < 0.05)\n";
  os << fmt::format("{:<20} {:>6} {:>9} {:>10} {:>4}\n", "metric", "target", "r", "p", "n");
  for (const auto& c : a.correlations) {
    os << fmt::format("{:<20} {:>6} {:>9.3f} {:>10.3g} {:>4}{}\n", c.metric, c.target, c.result.r, c.result.p,
                      c.result.n, c.result.p < 0.05 ? " *" : "");
  }
  if (a.glm_train) os << '\n' << stats::format_glm_text(*a.glm_train, "GLM (Gaussian, identity link): train reward");
  if (a.glm_test) os << '\n' << stats::format_glm_text(*a.glm_test, "GLM (Gaussian, identity link): test reward");
  if (!a.notes.empty()) {
    os << "\nNotes\n";
    for (const auto& n : a.notes) os << "  " << n << '\n';
  }
  return os.str();
}

std::vector<fs::path> write_analysis(const Analysis& a, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  const auto put = [&](const std::string& name, const std::string& content) {
    write_file(dir / name, content);
    written.push_back(dir / name);
  };
  put("rewards.csv", rewards_csv(a));
  put("points.csv", points_csv(a));
  put("correlations.csv", correlations_csv(a));
  if (a.glm_train) {
    put("glm_train.csv", stats::format_glm_csv(*a.glm_train));
    put("glm_train.txt", stats::format_glm_text(*a.glm_train, "GLM (Gaussian, identity link): train reward"));
  }
  if (a.glm_test) {
    put("glm_test.csv", stats::format_glm_csv(*a.glm_test));
    put("glm_test.txt", stats::format_glm_text(*a.glm_test, "GLM (Gaussian, identity link): test reward"));
  }
  put("analysis.txt", format_analysis_text(a));
  return written;
}

}  // namespace plasticity::harness
