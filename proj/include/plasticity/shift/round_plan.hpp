#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plasticity/env/gridworld.hpp"

namespace plasticity::shift {

enum class Protocol { Permute, Window, Expand };

std::string to_string(Protocol p);
Protocol parse_protocol(const std::string& name);

/// Bijection over the 121 cell positions. Patch p of an observation moves to position map[p];
/// the four channels of a patch travel together.
class PermutationMap {
 public:
  static PermutationMap identity(int n = env::kCells);

  /// Throws UsageError unless `targets` is a permutation of 0..n-1.
  explicit PermutationMap(std::vector<int> targets);

  int operator[](int p) const { return targets_[p]; }
  int size() const { return static_cast<int>(targets_.size()); }
  const std::vector<int>& targets() const { return targets_; }
  bool is_identity() const;
  PermutationMap inverse() const;

  friend bool operator==(const PermutationMap&, const PermutationMap&) = default;

 private:
  std::vector<int> targets_;
};

/// Moves each 4-channel patch of `in` to its mapped position in `out`. Both hold
/// kObservationSize entries and must not alias.
void apply_permutation(const Real* in, Real* out, const PermutationMap& map);

env::Observation apply_permutation(const env::Observation& obs, const PermutationMap& map);

/// Resolved schedule of which instances are trainable in each round and which are held out.
struct RoundPlan {
  Protocol protocol = Protocol::Permute;
  int n_rounds = 10;
  int k = 100;
  env::EnvParams env;
  std::vector<std::vector<std::uint64_t>> train_seeds;  // active seeds, one list per round
  std::vector<std::uint64_t> test_seeds;
  std::vector<PermutationMap> permutations;  // one per round for Permute; empty otherwise
};

/// Builds a plan. All instance seeds come from a single stream seeded by `plan_seed`
/// (test seeds first), so every round draws from the same distribution and the held-out set
/// never overlaps any training round. Round 0 of Permute uses the identity map.
RoundPlan make_round_plan(Protocol protocol, int n_rounds, int k, int n_test, std::uint64_t plan_seed,
                          const env::EnvParams& env = {});

const std::vector<std::uint64_t>& active_seeds(const RoundPlan& plan, int round);
std::vector<env::GridworldInstance> active_instances(const RoundPlan& plan, int round);
std::vector<env::GridworldInstance> test_instances(const RoundPlan& plan);

/// Map in force during `round` (identity for Window and Expand).
const PermutationMap& round_permutation(const RoundPlan& plan, int round);

/// One line per round: "round <i>:" followed by the 121 targets.
std::string dump_permutations(const RoundPlan& plan);

}  // namespace plasticity::shift
