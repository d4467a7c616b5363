// Command-line front end: run, analyze, plot and sweep plasticity experiments.
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include <fmt/format.h>

#include "plasticity/errors.hpp"
#include "plasticity/harness/analyze.hpp"
#include "plasticity/harness/archive.hpp"
#include "plasticity/harness/config.hpp"
#include "plasticity/harness/experiment.hpp"
#include "plasticity/harness/plot.hpp"

namespace fs = std::filesystem;
using namespace plasticity;

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kNumericalError = 2, kIoError = 3 };

struct Overrides {
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> set;
};

harness::ExperimentConfig load_with_overrides(const std::string& path, const Overrides& o) {
  auto config = harness::load_config(path);
  for (const auto& kv : o.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!o.out.empty()) config.output_dir = o.out;
  if (o.seed) config.master_seed = *o.seed;
  config.validate();
  return config;
}

void log_line(const std::string& s) { std::cerr << s << std::endl; }

void print_analysis(const std::vector<harness::MethodArchive>& archives, const fs::path& out) {
  const auto analysis = harness::analyze(archives);
  harness::write_analysis(analysis, out);
  std::cout << harness::format_analysis_text(analysis);
  std::cout << "\nTables written to " << out.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plasticity-loss experiments on procedurally generated gridworlds"};
  app.require_subcommand(1);

  int threads = 1;
  bool overwrite = false;
  Overrides overrides;

  auto* run = app.add_subcommand("run", "Train every method x seed of a config and write archives");
  std::string run_config;
  run->add_option("config", run_config, "INI experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("--threads", threads, "Worker threads (seeds run in parallel)")->check(CLI::PositiveNumber);
  run->add_option("--out", overrides.out, "Output directory (overrides experiment.output_dir)");
  run->add_option("--seed", overrides.seed, "Master seed (overrides experiment.master_seed)");
  run->add_option("--set", overrides.set, "Override a config value, e.g. --set ppo.learning_rate=1e-4");
  run->add_flag("--overwrite", overwrite, "Replace existing method archives");

  auto* analyze = app.add_subcommand("analyze", "Summary tables, t-tests, correlations and GLMs");
  std::vector<std::string> analyze_paths;
  std::string analyze_out = "analysis";
  analyze->add_option("archives", analyze_paths, "Run or method directories")->required();
  analyze->add_option("--out", analyze_out, "Directory for the tables");

  auto* plot = app.add_subcommand("plot", "SVG figures");
  std::vector<std::string> plot_paths;
  std::string plot_out = "plots";
  std::string kind;
  harness::PlotOptions plot_options;
  plot->add_option("archives", plot_paths, "Run or method directories")->required();
  plot->add_option("--kind", kind, "epoch_curve, round_curve, metric_curve or correlation_scatter")->required();
  plot->add_option("--metric", plot_options.metrics,
                   "Metric(s) for metric_curve / correlation_scatter (entropy, weight_mag, weight_diff, grad_norm, "
                   "dead_unit_fraction)");
  plot->add_option("--target", plot_options.target, "train or test");
  plot->add_option("--out", plot_out, "Directory for the SVG files");

  auto* sweep = app.add_subcommand("sweep", "Run a config once per value of one parameter");
  std::string sweep_config, sweep_param;
  std::vector<std::string> sweep_values;
  sweep->add_option("config", sweep_config, "INI experiment config")->required()->check(CLI::ExistingFile);
  sweep->add_option("--param", sweep_param, "Dotted key, e.g. ppo.learning_rate")->required();
  sweep->add_option("--values", sweep_values, "Comma-separated values")->required()->delimiter(',');
  sweep->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--out", overrides.out, "Output directory (overrides experiment.output_dir)");
  sweep->add_option("--seed", overrides.seed, "Master seed");
  sweep->add_option("--set", overrides.set, "Override a config value");
  sweep->add_flag("--overwrite", overwrite, "Replace existing method archives");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto config = load_with_overrides(run_config, overrides);
      harness::RunOptions opts{threads, overwrite, log_line};
      const auto archives = harness::run_experiment(config, opts);
      std::cerr << "archives written to " << config.output_dir << "\n";
      print_analysis(archives, fs::path(config.output_dir) / "analysis");
    } else if (*analyze) {
      std::vector<fs::path> paths(analyze_paths.begin(), analyze_paths.end());
      print_analysis(harness::load_archives(paths), analyze_out);
    } else if (*plot) {
      plot_options.kind = harness::parse_plot_kind(kind);
      if (plot_options.kind == harness::PlotKind::CorrelationScatter && plot_options.metrics.empty()) {
        for (auto m : harness::kMetricNames) plot_options.metrics.emplace_back(m);
      }
      std::vector<fs::path> paths(plot_paths.begin(), plot_paths.end());
      try {
        for (const auto& f : harness::plot(harness::load_archives(paths), plot_options, plot_out)) {
          std::cout << f.string() << "\n";
        }
      } catch (const UsageError& e) {
        throw ConfigError(e.what());
      }
    } else if (*sweep) {
      const auto base = load_with_overrides(sweep_config, overrides);
      std::string table = fmt::format("{},method,n,train_mean,train_se,test_mean,test_se\n", sweep_param);
      for (const auto& value : sweep_values) {
        auto config = base;
        config.set(sweep_param, value);
        config.output_dir = (fs::path(base.output_dir) / (sweep_param + "=" + value)).string();
        config.validate();
        std::cerr << "sweep " << sweep_param << " = " << value << "\n";
        const auto archives = harness::run_experiment(config, {threads, overwrite, log_line});
        const auto analysis = harness::analyze(archives);
        harness::write_analysis(analysis, fs::path(config.output_dir) / "analysis");
        for (const auto& m : analysis.methods) {
          table += fmt::format("{},{},{},{},{},{},{}\n", value, m.label, m.train_final.size(), m.train_mean,
                               m.train_se, m.test_mean, m.test_se);
        }
      }
      harness::write_file(fs::path(base.output_dir) / "sweep.csv", table);
      std::cout << table;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kOk;
}
