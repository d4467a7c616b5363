#include "plasticity/shift/round_plan.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

namespace plasticity::shift {

std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::Permute: return "permute";
    case Protocol::Window: return "window";
    case Protocol::Expand: return "expand";
  }
  return "unknown";
}

Protocol parse_protocol(const std::string& name) {
  if (name == "permute") return Protocol::Permute;
  if (name == "window") return Protocol::Window;
  if (name == "expand") return Protocol::Expand;
  throw ConfigError("unknown shift protocol '" + name + "' (expected permute, window or expand)");
}

PermutationMap PermutationMap::identity(int n) {
  std::vector<int> t(n);
  std::iota(t.begin(), t.end(), 0);
  return PermutationMap(std::move(t));
}

PermutationMap::PermutationMap(std::vector<int> targets) : targets_(std::move(targets)) {
  std::vector<bool> hit(targets_.size(), false);
  for (int t : targets_) {
    if (t < 0 || t >= static_cast<int>(targets_.size()) || hit[t]) {
      throw UsageError("permutation map is not a bijection over " + std::to_string(targets_.size()) +
                       " positions");
    }
    hit[t] = true;
  }
}

bool PermutationMap::is_identity() const {
  for (int i = 0; i < size(); ++i) {
    if (targets_[i] != i) return false;
  }
  return true;
}

PermutationMap PermutationMap::inverse() const {
  std::vector<int> inv(targets_.size());
  for (int i = 0; i < size(); ++i) inv[targets_[i]] = i;
  return PermutationMap(std::move(inv));
}

void apply_permutation(const Real* in, Real* out, const PermutationMap& map) {
  if (map.size() != env::kCells) throw UsageError("permutation map must cover 121 cells");
  for (int p = 0; p < env::kCells; ++p) {
    std::copy_n(in + p * env::kChannels, env::kChannels, out + map[p] * env::kChannels);
  }
}

env::Observation apply_permutation(const env::Observation& obs, const PermutationMap& map) {
  if (obs.size() != env::kObservationSize) {
    throw DimensionError("apply_permutation: observation must have 484 entries");
  }
  env::Observation out(env::kObservationSize);
  apply_permutation(obs.data(), out.data(), map);
  return out;
}

RoundPlan make_round_plan(Protocol protocol, int n_rounds, int k, int n_test, std::uint64_t plan_seed,
                          const env::EnvParams& env) {
  if (n_rounds < 1) throw ConfigError("round plan: n_rounds must be >= 1");
  if (k < 1) throw ConfigError("round plan: k must be >= 1");
  if (n_test < 0) throw ConfigError("round plan: n_test must be >= 0");

  RoundPlan plan;
  plan.protocol = protocol;
  plan.n_rounds = n_rounds;
  plan.k = k;
  plan.env = env;

  Rng seeds(plan_seed);
  std::unordered_set<std::uint64_t> used;
  auto draw = [&] {
    for (;;) {
      std::uint64_t s = seeds();
      if (used.insert(s).second) return s;
    }
  };
  auto draw_k = [&](int count) {
    std::vector<std::uint64_t> v(count);
    for (auto& s : v) s = draw();
    return v;
  };

  plan.test_seeds = draw_k(n_test);
  switch (protocol) {
    case Protocol::Permute: {
      auto fixed = draw_k(k);
      plan.train_seeds.assign(n_rounds, fixed);
      std::seed_seq seq{static_cast<std::uint32_t>(plan_seed), static_cast<std::uint32_t>(plan_seed >> 32),
                        0x7065726du};
      Rng perm_rng(seq);
      plan.permutations.push_back(PermutationMap::identity());
      std::vector<int> t(env::kCells);
      while (static_cast<int>(plan.permutations.size()) < n_rounds) {
        std::iota(t.begin(), t.end(), 0);
        std::shuffle(t.begin(), t.end(), perm_rng);
        PermutationMap m(t);
        if (std::find(plan.permutations.begin(), plan.permutations.end(), m) == plan.permutations.end()) {
          plan.permutations.push_back(std::move(m));
        }
      }
      break;
    }
    case Protocol::Window:
      for (int r = 0; r < n_rounds; ++r) plan.train_seeds.push_back(draw_k(k));
      break;
    case Protocol::Expand: {
      std::vector<std::uint64_t> all;
      for (int r = 0; r < n_rounds; ++r) {
        auto fresh = draw_k(k);
        all.insert(all.end(), fresh.begin(), fresh.end());
        plan.train_seeds.push_back(all);
      }
      break;
    }
  }
  return plan;
}

namespace {
void check_round(const RoundPlan& plan, int round) {
  if (round < 0 || round >= plan.n_rounds) {
    throw UsageError("round " + std::to_string(round) + " out of range [0, " + std::to_string(plan.n_rounds) +
                     ")");
  }
}
}  // namespace

const std::vector<std::uint64_t>& active_seeds(const RoundPlan& plan, int round) {
  check_round(plan, round);
  return plan.train_seeds[round];
}

std::vector<env::GridworldInstance> active_instances(const RoundPlan& plan, int round) {
  std::vector<env::GridworldInstance> out;
  for (auto s : active_seeds(plan, round)) out.push_back(env::sample_instance(s, plan.env));
  return out;
}

std::vector<env::GridworldInstance> test_instances(const RoundPlan& plan) {
  std::vector<env::GridworldInstance> out;
  for (auto s : plan.test_seeds) out.push_back(env::sample_instance(s, plan.env));
  return out;
}

const PermutationMap& round_permutation(const RoundPlan& plan, int round) {
  static const PermutationMap kIdentity = PermutationMap::identity();
  check_round(plan, round);
  if (plan.permutations.empty()) return kIdentity;
  return plan.permutations[round];
}

std::string dump_permutations(const RoundPlan& plan) {
  std::ostringstream os;
  for (int r = 0; r < plan.n_rounds; ++r) {
    os << "round " << r << ":";
    for (int t : round_permutation(plan, r).targets()) os << ' ' << t;
    os << '\n';
  }
  return os.str();
}

}  // namespace plasticity::shift
