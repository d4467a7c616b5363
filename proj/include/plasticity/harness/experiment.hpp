#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "plasticity/harness/archive.hpp"
#include "plasticity/harness/config.hpp"

namespace plasticity::harness {

struct RunOptions {
  int threads = 1;
  bool overwrite = false;  // replace existing method archives instead of refusing
  std::function<void(const std::string&)> log;  // progress lines; may be empty
};

/// Trains one (method, seed) pair through every round and writes seed_<seed>/ under
/// `method_dir`. Returns the records that were written.
SeedArchive run_seed(const ExperimentConfig& config, const std::string& method, int seed, const fs::path& method_dir);

/// Runs every method x seed job on a pool of `threads` workers and writes one archive per
/// method under config.output_dir. Output is identical for any thread count.
std::vector<MethodArchive> run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Per-seed round-end rewards in summary/rounds.csv of each method archive.
void write_method_summary(const MethodArchive& archive);

}  // namespace plasticity::harness
