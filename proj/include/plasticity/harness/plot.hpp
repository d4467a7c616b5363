#pragma once

#include <string>
#include <vector>

#include "plasticity/harness/archive.hpp"

namespace plasticity::harness {

enum class PlotKind { EpochCurve, RoundCurve, MetricCurve, CorrelationScatter };

PlotKind parse_plot_kind(const std::string& name);
std::string to_string(PlotKind kind);

struct PlotOptions {
  PlotKind kind = PlotKind::EpochCurve;
  std::string target = "train";      // epoch/round curves and scatter y-axis: "train" or "test"
  std::vector<std::string> metrics;  // metric_curve and correlation_scatter; must not be empty
  int width = 720;
  int height = 440;
};

/// Renders SVG figures, one series per method with mean +/- standard-error shading over seeds.
/// Epoch-indexed figures mark round ends with dotted vertical lines. Output bytes depend only on
/// the archives and options. Throws UsageError (before writing anything) on an empty archive
/// list, an archive without records, or an empty metric selection where one is required.
std::vector<fs::path> plot(const std::vector<MethodArchive>& archives, const PlotOptions& options,
                           const fs::path& out_dir);

/// The SVG text for a single figure; `plot` writes these. `metric` selects the figure for
/// metric_curve (ignored otherwise).
std::string render_svg(const std::vector<MethodArchive>& archives, const PlotOptions& options,
                       const std::string& metric = {});

}  // namespace plasticity::harness
