// Copyright 2026 The taskmix Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "taskmix/prng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <set>
#include <vector>

namespace taskmix {
namespace {

TEST(Prng, Mix64FixedPoints) {
  EXPECT_EQ(mix64(0), 0u);
  EXPECT_EQ(combine_key(1, 2), 0xf2826f98653e9e57ULL);
}

TEST(Prng, SplitMix64GoldenOutputs) {
  SplitMix64 rng(5);
  EXPECT_EQ(rng(), 0x63033b0ca389c35aULL);
  EXPECT_EQ(rng(), 0xc097314d939736f8ULL);
  EXPECT_EQ(rng(), 0x3b92d3f0106bc147ULL);
}

TEST(Prng, CounterAccessMatchesSequentialStepping) {
  for (std::uint64_t seed : {0ULL, 1ULL, 0xdeadbeefULL, ~0ULL}) {
    SplitMix64 rng(seed);
    for (std::uint64_t i = 0; i < 100; ++i) EXPECT_EQ(rng(), splitmix64_at(seed, i));
  }
}

TEST(Prng, Fnv1a64KnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("mnli"), 0x05a4c6a2c01d7459ULL);
}

TEST(Prng, UnitIntervalBounds) {
  EXPECT_EQ(to_unit_interval(0), 0.0);
  EXPECT_LT(to_unit_interval(~0ULL), 1.0);
  EXPECT_EQ(to_unit_interval(1ULL << 63), 0.5);
}

TEST(Prng, UniformBelowStaysInRange) {
  SplitMix64 rng(11);
  for (std::uint64_t bound : {1ULL, 2ULL, 3ULL, 7ULL, 1000ULL, (1ULL << 63) + 5}) {
    for (int i = 0; i < 1000; ++i) EXPECT_LT(uniform_below(rng, bound), bound);
  }
}

TEST(Prng, UniformBelowIsRoughlyFlat) {
  SplitMix64 rng(99);
  std::vector<int> counts(10, 0);
  constexpr int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) ++counts[uniform_below(rng, 10)];
  for (int c : counts) EXPECT_NEAR(c, kDraws / 10, 500);
}

TEST(Prng, ShuffledIndicesGolden) {
  const std::vector<std::uint32_t> expected{0, 2, 1, 5, 3, 9, 4, 6, 8, 7};
  EXPECT_EQ(shuffled_indices(10, 123), expected);
}

TEST(Prng, ShuffleIsAPermutation) {
  for (std::size_t n : {0u, 1u, 2u, 17u, 1000u}) {
    auto order = shuffled_indices(n, n * 31 + 1);
    std::sort(order.begin(), order.end());
    std::vector<std::uint32_t> iota(n);
    std::iota(iota.begin(), iota.end(), 0u);
    EXPECT_EQ(order, iota);
  }
}

TEST(Prng, DistinctKeysGiveDistinctShuffles) {
  std::set<std::vector<std::uint32_t>> seen;
  for (std::uint64_t k = 0; k < 50; ++k) seen.insert(shuffled_indices(20, combine_key(7, k)));
  EXPECT_EQ(seen.size(), 50u);
}

}  // namespace
}  // namespace taskmix
