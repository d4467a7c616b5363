#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "plasticity/diagnostics/metrics.hpp"
#include "plasticity/harness/config.hpp"
#include "plasticity/interventions/interventions.hpp"

namespace plasticity::harness {

namespace fs = std::filesystem;

// Archive layout, one directory per method:
//   config.snapshot                INI, written once before training starts
//   seed_<i>/metrics.ldj           one JSON object per epoch (field order below)
//   seed_<i>/events.ldj            one JSON object per intervention event
//   seed_<i>/permutations.txt      Permute only: the map of every round
//   summary/                       comma-separated tables written after all seeds finish
//
// metrics.ldj fields, in order: epoch, round, train_reward, test_reward (null when not
// measured), entropy, weight_mag, weight_diff, grad_norm, dead_unit_fraction, episode_returns.

std::string metrics_line(const diagnostics::MetricsRecord& r);
diagnostics::MetricsRecord parse_metrics_line(const std::string& line);

std::string event_line(const interventions::InterventionEvent& e);
interventions::InterventionEvent parse_event_line(const std::string& line);

/// Appends lines to a file, flushing after each write.
class LineWriter {
 public:
  explicit LineWriter(const fs::path& path);
  void write(const std::string& line);

 private:
  fs::path path_;
  std::ofstream out_;
};

struct SeedArchive {
  int seed = 0;
  std::vector<diagnostics::MetricsRecord> records;
  std::vector<interventions::InterventionEvent> events;
};

struct MethodArchive {
  fs::path dir;
  std::string label;
  ExperimentConfig config;
  std::vector<SeedArchive> seeds;
};

/// Reads one method directory (must contain config.snapshot).
MethodArchive load_archive(const fs::path& dir);

/// Each path is either a method directory or a run directory whose subdirectories are
/// method directories. Results are ordered by the config's method list, then by path.
std::vector<MethodArchive> load_archives(const std::vector<fs::path>& paths);

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, const std::string& content);

}  // namespace plasticity::harness
