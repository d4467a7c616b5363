#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "plasticity/shift/round_plan.hpp"

using namespace plasticity;
using namespace plasticity::shift;

namespace {

std::set<std::uint64_t> as_set(const std::vector<std::uint64_t>& v) { return {v.begin(), v.end()}; }

env::Observation random_observation(std::uint64_t seed) {
  auto g = env::sample_instance(seed);
  return g.reset();
}

}  // namespace

TEST(Permutation, IdentityLeavesObservationUnchanged) {
  const auto obs = random_observation(1);
  const auto out = apply_permutation(obs, PermutationMap::identity());
  EXPECT_TRUE((out.array() == obs.array()).all());
}

TEST(Permutation, InverseRoundTrips) {
  Rng rng(4);
  std::vector<int> t(env::kCells);
  std::iota(t.begin(), t.end(), 0);
  std::shuffle(t.begin(), t.end(), rng);
  const PermutationMap map(t);
  const auto obs = random_observation(2);
  const auto back = apply_permutation(apply_permutation(obs, map), map.inverse());
  EXPECT_TRUE((back.array() == obs.array()).all());
}

TEST(Permutation, PatchesMoveWholeAndChannelSumsArePreserved) {
  Rng rng(5);
  std::vector<int> t(env::kCells);
  std::iota(t.begin(), t.end(), 0);
  std::shuffle(t.begin(), t.end(), rng);
  const PermutationMap map(t);
  const auto obs = random_observation(3);
  const auto out = apply_permutation(obs, map);
  for (int ch = 0; ch < env::kChannels; ++ch) {
    double a = 0, b = 0;
    for (int c = 0; c < env::kCells; ++c) {
      a += obs(c * env::kChannels + ch);
      b += out(c * env::kChannels + ch);
    }
    EXPECT_EQ(a, b);
  }
  for (int p = 0; p < env::kCells; ++p) {
    for (int ch = 0; ch < env::kChannels; ++ch) {
      EXPECT_EQ(out(map[p] * env::kChannels + ch), obs(p * env::kChannels + ch));
    }
  }
}

TEST(Permutation, NonBijectionIsRejected) {
  std::vector<int> t(env::kCells, 0);
  EXPECT_THROW(PermutationMap{t}, UsageError);
  std::vector<int> out_of_range(env::kCells);
  std::iota(out_of_range.begin(), out_of_range.end(), 1);
  EXPECT_THROW(PermutationMap{out_of_range}, UsageError);
}

TEST(RoundPlan, PermuteKeepsSeedsAndChangesMaps) {
  const auto plan = make_round_plan(Protocol::Permute, 4, 10, 5, 99);
  for (int r = 1; r < 4; ++r) EXPECT_EQ(active_seeds(plan, r), active_seeds(plan, 0));
  EXPECT_TRUE(round_permutation(plan, 0).is_identity());
  for (int r = 0; r < 4; ++r) {
    for (int q = r + 1; q < 4; ++q) EXPECT_FALSE(round_permutation(plan, r) == round_permutation(plan, q));
  }
  EXPECT_EQ(active_instances(plan, 0).size(), 10u);
}

TEST(RoundPlan, WindowRoundsAreDisjoint) {
  const auto plan = make_round_plan(Protocol::Window, 3, 8, 5, 1);
  std::set<std::uint64_t> all;
  for (int r = 0; r < 3; ++r) {
    EXPECT_EQ(active_seeds(plan, r).size(), 8u);
    for (auto s : active_seeds(plan, r)) EXPECT_TRUE(all.insert(s).second);
    EXPECT_TRUE(round_permutation(plan, r).is_identity());
  }
}

TEST(RoundPlan, ExpandGrowsCumulatively) {
  const auto plan = make_round_plan(Protocol::Expand, 3, 100, 5, 2);
  EXPECT_EQ(active_instances(plan, 2).size(), 300u);
  for (int r = 1; r < 3; ++r) {
    const auto prev = as_set(active_seeds(plan, r - 1));
    const auto cur = as_set(active_seeds(plan, r));
    EXPECT_EQ(cur.size(), static_cast<std::size_t>(100 * (r + 1)));
    EXPECT_TRUE(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
  }
}

TEST(RoundPlan, TestSeedsNeverOverlapTraining) {
  for (auto protocol : {Protocol::Permute, Protocol::Window, Protocol::Expand}) {
    const auto plan = make_round_plan(protocol, 5, 20, 50, 7);
    const auto test = as_set(plan.test_seeds);
    EXPECT_EQ(test.size(), 50u);
    for (int r = 0; r < 5; ++r) {
      for (auto s : active_seeds(plan, r)) EXPECT_EQ(test.count(s), 0u);
    }
    EXPECT_EQ(test_instances(plan).size(), 50u);
  }
}

TEST(RoundPlan, OutOfRangeRoundAndDeterminism) {
  const auto a = make_round_plan(Protocol::Window, 2, 3, 2, 11);
  const auto b = make_round_plan(Protocol::Window, 2, 3, 2, 11);
  EXPECT_EQ(a.train_seeds, b.train_seeds);
  EXPECT_EQ(a.test_seeds, b.test_seeds);
  EXPECT_THROW(active_seeds(a, 2), UsageError);
  EXPECT_THROW(active_seeds(a, -1), UsageError);
  EXPECT_THROW(parse_protocol("shuffle"), ConfigError);
  EXPECT_EQ(parse_protocol(to_string(Protocol::Expand)), Protocol::Expand);
}

TEST(RoundPlan, PermutationDumpListsEveryRound) {
  const auto plan = make_round_plan(Protocol::Permute, 3, 2, 2, 5);
  const auto dump = dump_permutations(plan);
  EXPECT_EQ(std::count(dump.begin(), dump.end(), '\n'), 3);
  EXPECT_EQ(dump.rfind("round 0:", 0), 0u);
}
