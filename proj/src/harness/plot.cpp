#include "plasticity/harness/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "plasticity/errors.hpp"
#include "plasticity/harness/analyze.hpp"

namespace plasticity::harness {

PlotKind parse_plot_kind(const std::string& name) {
  if (name == "epoch_curve") return PlotKind::EpochCurve;
  if (name == "round_curve") return PlotKind::RoundCurve;
  if (name == "metric_curve") return PlotKind::MetricCurve;
  if (name == "correlation_scatter") return PlotKind::CorrelationScatter;
  throw ConfigError("unknown plot kind '" + name +
                    "' (expected epoch_curve, round_curve, metric_curve or correlation_scatter)");
}

std::string to_string(PlotKind kind) {
  switch (kind) {
    case PlotKind::EpochCurve: return "epoch_curve";
    case PlotKind::RoundCurve: return "round_curve";
    case PlotKind::MetricCurve: return "metric_curve";
    case PlotKind::CorrelationScatter: return "correlation_scatter";
  }
  return "?";
}

namespace {

constexpr std::array<const char*, 10> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                               "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string f2(double v) { return fmt::format("{:.2f}", v); }

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Series {
  std::string label;
  std::vector<double> x, mean, se;
};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) {
      const double pad = std::max(1e-3, std::fabs(lo) * 0.05);
      lo -= pad;
      hi += pad;
    }
  }
};

double nice_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  return (f < 1.5 ? 1.0 : f < 3.0 ? 2.0 : f < 7.0 ? 5.0 : 10.0) * mag;
}

// One plotting area with its data-to-pixel transform.
struct Panel {
  double left, top, width, height;
  Range xr, yr;

  double px(double x) const { return left + (x - xr.lo) / (xr.hi - xr.lo) * width; }
  double py(double y) const { return top + height - (y - yr.lo) / (yr.hi - yr.lo) * height; }

  void axes(std::ostringstream& os, const std::string& title, const std::string& xlabel,
            const std::string& ylabel) const {
    os << fmt::format(R"(<rect class="frame" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333"/>)",
                      f2(left), f2(top), f2(width), f2(height))
       << '\n';
    const double xs = nice_step(xr.hi - xr.lo);
    for (double t = std::ceil(xr.lo / xs) * xs; t <= xr.hi + 1e-9 * xs; t += xs) {
      os << fmt::format(R"(<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#333"/>)", f2(px(t)), f2(top + height),
                        f2(top + height + 4))
         << fmt::format(R"(<text x="{}" y="{}" font-size="10" text-anchor="middle">{}</text>)", f2(px(t)),
                        f2(top + height + 15), fmt::format("{:g}", std::fabs(t) < 1e-12 * xs ? 0.0 : t))
         << '\n';
    }
    const double ys = nice_step(yr.hi - yr.lo);
    for (double t = std::ceil(yr.lo / ys) * ys; t <= yr.hi + 1e-9 * ys; t += ys) {
      os << fmt::format(R"(<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="#333"/>)", f2(left - 4), f2(py(t)),
                        f2(left))
         << fmt::format(R"(<text x="{}" y="{}" font-size="10" text-anchor="end">{}</text>)", f2(left - 6),
                        f2(py(t) + 3), fmt::format("{:g}", std::fabs(t) < 1e-12 * ys ? 0.0 : t))
         << '\n';
    }
    os << fmt::format(R"(<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>)", f2(left + width / 2),
                      f2(top - 8), escape(title))
       << '\n';
    os << fmt::format(R"(<text x="{}" y="{}" font-size="11" text-anchor="middle">{}</text>)", f2(left + width / 2),
                      f2(top + height + 32), escape(xlabel))
       << '\n';
    os << fmt::format(R"svg(<text x="{0}" y="{1}" font-size="11" text-anchor="middle" transform="rotate(-90 {0} {1})">{2}</text>)svg",
                      f2(left - 42), f2(top + height / 2), escape(ylabel))
       << '\n';
  }

  void series(std::ostringstream& os, const Series& s, const char* color) const {
    std::string band, line;
    for (std::size_t i = 0; i < s.x.size(); ++i) band += f2(px(s.x[i])) + "," + f2(py(s.mean[i] + s.se[i])) + " ";
    for (std::size_t i = s.x.size(); i-- > 0;) band += f2(px(s.x[i])) + "," + f2(py(s.mean[i] - s.se[i])) + " ";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) line += ' ';
      line += f2(px(s.x[i])) + "," + f2(py(s.mean[i]));
    }
    if (!band.empty()) band.pop_back();
    os << fmt::format(R"(<polygon class="band" data-method="{}" points="{}" fill="{}" fill-opacity="0.2" stroke="none"/>)",
                      escape(s.label), band, color)
       << '\n';
    os << fmt::format(R"(<polyline class="series" data-method="{}" points="{}" fill="none" stroke="{}" stroke-width="1.5"/>)",
                      escape(s.label), line, color)
       << '\n';
  }

  void boundary(std::ostringstream& os, double x) const {
    os << fmt::format(
              R"(<line class="round-boundary" x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#555" stroke-dasharray="2,3"/>)",
              f2(px(x)), f2(top), f2(top + height))
       << '\n';
  }
};

void legend(std::ostringstream& os, const std::vector<std::string>& labels, double x, double y) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double yy = y + 16.0 * static_cast<double>(i);
    os << fmt::format(R"(<rect x="{}" y="{}" width="12" height="3" fill="{}"/>)", f2(x), f2(yy - 4),
                      kPalette[i % kPalette.size()])
       << fmt::format(R"(<text class="legend" x="{}" y="{}" font-size="11">{}</text>)", f2(x + 18), f2(yy),
                      escape(labels[i]))
       << '\n';
  }
}

std::string header(int w, int h) {
  return fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\">\n<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n",
      w, h);
}

void mean_se(const std::vector<double>& v, double& mean, double& se) {
  mean = stats::mean(v);
  se = stats::standard_error(v);
}

// Per-epoch mean and standard error over seeds of one record field.
Series epoch_series(const MethodArchive& a, const std::string& field) {
  std::map<int, std::vector<double>> by_epoch;
  for (const auto& s : a.seeds) {
    for (const auto& r : s.records) {
      if (auto v = record_field(r, field)) by_epoch[r.epoch].push_back(*v);
    }
  }
  Series out{a.label, {}, {}, {}};
  for (const auto& [epoch, vals] : by_epoch) {
    double m, se;
    mean_se(vals, m, se);
    out.x.push_back(epoch);
    out.mean.push_back(m);
    out.se.push_back(se);
  }
  return out;
}

Series round_series(const MethodArchive& a, const std::string& target) {
  const int nr = a.config.n_rounds;
  std::vector<std::vector<double>> per_round(static_cast<std::size_t>(nr));
  for (const auto& s : a.seeds) {
    const auto rr = round_rewards(s, nr, static_cast<std::size_t>(a.config.reward_window));
    const auto& v = target == "test" ? rr.test_normalized : rr.train_normalized;
    for (std::size_t r = 0; r < v.size(); ++r) {
      if (std::isfinite(v[r])) per_round[r].push_back(v[r]);
    }
  }
  Series out{a.label, {}, {}, {}};
  for (std::size_t r = 0; r < per_round.size(); ++r) {
    if (per_round[r].empty()) continue;
    double m, se;
    mean_se(per_round[r], m, se);
    out.x.push_back(static_cast<double>(r + 1));
    out.mean.push_back(m);
    out.se.push_back(se);
  }
  return out;
}

std::string line_figure(const std::vector<Series>& series, const PlotOptions& o, const std::string& title,
                        const std::string& xlabel, const std::string& ylabel, const std::vector<double>& boundaries) {
  Panel p{70.0, 36.0, o.width - 70.0 - 170.0, o.height - 36.0 - 52.0, {}, {}};
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      p.xr.add(s.x[i]);
      p.yr.add(s.mean[i] + s.se[i]);
      p.yr.add(s.mean[i] - s.se[i]);
    }
  }
  p.xr.finish();
  p.yr.finish();
  std::ostringstream os;
  os << header(o.width, o.height);
  p.axes(os, title, xlabel, ylabel);
  for (double b : boundaries) {
    if (b > p.xr.lo && b < p.xr.hi) p.boundary(os, b);
  }
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < series.size(); ++i) {
    p.series(os, series[i], kPalette[i % kPalette.size()]);
    labels.push_back(series[i].label);
  }
  legend(os, labels, p.left + p.width + 16.0, p.top + 10.0);
  os << "</svg>\n";
  return os.str();
}

// Halfway between the last epoch of one round and the first of the next, read off the records.
std::vector<double> round_ends(const MethodArchive& a) {
  std::vector<double> out;
  for (const auto& s : a.seeds) {
    for (std::size_t i = 1; i < s.records.size(); ++i) {
      if (s.records[i].round != s.records[i - 1].round) {
        out.push_back(0.5 * (s.records[i - 1].epoch + s.records[i].epoch));
      }
    }
    if (!out.empty()) break;
  }
  return out;
}

std::string scatter_figure(const std::vector<MethodArchive>& archives, const PlotOptions& o) {
  const Analysis an = analyze(archives);
  const std::size_t n = o.metrics.size();
  const std::size_t cols = std::min<std::size_t>(n, 3);
  const std::size_t rows = (n + cols - 1) / cols;
  const double cell_w = 260.0, cell_h = 220.0;
  const int w = static_cast<int>(cols * cell_w + 170.0);
  const int h = static_cast<int>(rows * cell_h + 20.0);

  std::vector<std::string> labels;
  for (const auto& a : archives) labels.push_back(a.label);

  std::ostringstream os;
  os << header(w, h);
  for (std::size_t k = 0; k < n; ++k) {
    const auto mi = std::find(kMetricNames.begin(), kMetricNames.end(), o.metrics[k]);
    if (mi == kMetricNames.end()) throw UsageError("unknown metric '" + o.metrics[k] + "'");
    const auto m = static_cast<std::size_t>(mi - kMetricNames.begin());
    Panel p{static_cast<double>(k % cols) * cell_w + 62.0, static_cast<double>(k / cols) * cell_h + 36.0,
            cell_w - 82.0, cell_h - 88.0, {}, {}};
    for (const auto& pt : an.points) {
      p.xr.add(pt.metrics[m]);
      p.yr.add(o.target == "test" ? pt.test : pt.train);
    }
    p.xr.finish();
    p.yr.finish();
    std::string title = o.metrics[k];
    for (const auto& c : an.correlations) {
      if (c.metric == o.metrics[k] && c.target == o.target) {
        title += fmt::format(" (r={:.2f}, p={:.2g})", c.result.r, c.result.p);
      }
    }
    p.axes(os, title, "normalized " + o.metrics[k], "normalized " + o.target + " reward");
    for (const auto& pt : an.points) {
      const double y = o.target == "test" ? pt.test : pt.train;
      if (!std::isfinite(y) || !std::isfinite(pt.metrics[m])) continue;
      const auto li = static_cast<std::size_t>(std::find(labels.begin(), labels.end(), pt.method) - labels.begin());
      os << fmt::format(R"(<circle class="point" data-method="{}" data-seed="{}" cx="{}" cy="{}" r="3" fill="{}"/>)",
                        escape(pt.method), pt.seed, f2(p.px(pt.metrics[m])), f2(p.py(y)),
                        kPalette[li % kPalette.size()])
         << '\n';
    }
  }
  legend(os, labels, static_cast<double>(cols) * cell_w + 10.0, 46.0);
  os << "</svg>\n";
  return os.str();
}

void check_inputs(const std::vector<MethodArchive>& archives, const PlotOptions& o) {
  if (archives.empty()) throw UsageError("plot: no archives");
  for (const auto& a : archives) {
    bool any = false;
    for (const auto& s : a.seeds) any = any || !s.records.empty();
    if (!any) throw UsageError("plot: archive " + a.dir.string() + " has no metrics records");
  }
  if (o.target != "train" && o.target != "test") throw UsageError("plot: target must be train or test");
  const bool needs_metrics = o.kind == PlotKind::MetricCurve || o.kind == PlotKind::CorrelationScatter;
  if (needs_metrics && o.metrics.empty()) throw UsageError("plot: " + to_string(o.kind) + " needs a metric selection");
  for (const auto& m : o.metrics) {
    if (std::find(kMetricNames.begin(), kMetricNames.end(), m) == kMetricNames.end()) {
      throw UsageError("plot: unknown metric '" + m + "'");
    }
  }
}

}  // namespace

std::string render_svg(const std::vector<MethodArchive>& archives, const PlotOptions& o, const std::string& metric) {
  check_inputs(archives, o);
  std::vector<Series> series;
  switch (o.kind) {
    case PlotKind::EpochCurve: {
      const std::string field = o.target + "_reward";
      for (const auto& a : archives) series.push_back(epoch_series(a, field));
      return line_figure(series, o, o.target == "test" ? "Test performance" : "Training performance", "epoch",
                         "mean episodic reward", round_ends(archives.front()));
    }
    case PlotKind::RoundCurve:
      for (const auto& a : archives) series.push_back(round_series(a, o.target));
      return line_figure(series, o, "Normalized " + o.target + " reward by round", "round",
                         "normalized mean reward (final episodes)", {});
    case PlotKind::MetricCurve: {
      const std::string m = metric.empty() ? o.metrics.front() : metric;
      if (std::find(kMetricNames.begin(), kMetricNames.end(), m) == kMetricNames.end()) {
        throw UsageError("plot: unknown metric '" + m + "'");
      }
      for (const auto& a : archives) series.push_back(epoch_series(a, m));
      return line_figure(series, o, m, "epoch", m, round_ends(archives.front()));
    }
    case PlotKind::CorrelationScatter:
      return scatter_figure(archives, o);
  }
  return {};
}

std::vector<fs::path> plot(const std::vector<MethodArchive>& archives, const PlotOptions& options,
                           const fs::path& out_dir) {
  check_inputs(archives, options);
  std::vector<std::pair<fs::path, std::string>> files;
  const std::string kind = to_string(options.kind);
  if (options.kind == PlotKind::MetricCurve) {
    for (const auto& m : options.metrics) files.emplace_back(out_dir / (kind + "_" + m + ".svg"), render_svg(archives, options, m));
  } else {
    files.emplace_back(out_dir / (kind + "_" + options.target + ".svg"), render_svg(archives, options));
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  for (const auto& [path, svg] : files) {
    write_file(path, svg);
    written.push_back(path);
  }
  return written;
}

}  // namespace plasticity::harness
