#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "plasticity/env/gridworld.hpp"
#include "plasticity/interventions/interventions.hpp"
#include "plasticity/nn/network.hpp"
#include "plasticity/ppo/config.hpp"
#include "plasticity/shift/round_plan.hpp"

namespace plasticity::harness {

/// Everything one experiment needs. Serialized as an INI file with the sections
/// [experiment], [ppo], [network], [env] and [interventions].
struct ExperimentConfig {
  shift::Protocol protocol = shift::Protocol::Permute;
  std::vector<std::string> methods{"warm_start"};  // intervention labels, one archive each
  int n_rounds = 10;
  int k = 100;
  long iterations_per_round = 20000;
  int n_seeds = 5;
  int n_test = 50;          // held-out instances
  int test_episodes = 50;   // episodes per test measurement
  int test_eval_every = 0;  // extra test evaluation every N epochs; 0 = round end only
  int eval_batch = 256;     // observations used for dead-unit counts and ReDo scores
  int reward_window = 50;   // final episodes averaged per round for normalized reward
  std::uint64_t master_seed = 0;
  std::string output_dir = "runs";

  ppo::PpoConfig ppo;
  nn::NetworkSpec network;
  env::EnvParams env;
  interventions::InterventionConfig intervention;  // hyperparameters; `kind` comes from `methods`

  void validate() const;

  /// Intervention config for one method label, carrying this config's hyperparameters.
  interventions::InterventionConfig method(const std::string& label) const;

  /// Sets one value by dotted key, e.g. "ppo.learning_rate" or "experiment.k".
  void set(const std::string& key, const std::string& value);

  /// Every key in a fixed order, formatted so that load(save(c)) == c.
  std::vector<std::pair<std::string, std::string>> entries() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text);
std::string format_config(const ExperimentConfig& config);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);

/// Independent RNG stream purposes. Each seed index draws every stream from
/// (master seed, seed index, purpose), so two methods run with the same seed index share
/// instances, initial weights and rollout randomness until their behaviour diverges.
enum class Stream : std::uint32_t { Plan = 1, Init, Rollout, Shuffle, Diagnostics, Intervention, Test };

std::uint64_t derive_seed(std::uint64_t master_seed, int seed_index, Stream purpose);

}  // namespace plasticity::harness
