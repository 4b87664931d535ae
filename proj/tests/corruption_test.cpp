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


#include "taskmix/corruption.hpp"

#include <gtest/gtest.h>

#include <set>
#include <vector>

namespace taskmix {
namespace {

std::vector<TokenId> iota_tokens(std::size_t n, TokenId base = 0) {
  std::vector<TokenId> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = base + static_cast<TokenId>(i);
  return t;
}

TEST(Sentinels, Encoding) {
  EXPECT_EQ(sentinel_token(0), -1);
  EXPECT_EQ(sentinel_token(99), -100);
  EXPECT_TRUE(is_sentinel(sentinel_token(3)));
  EXPECT_FALSE(is_sentinel(0));
  EXPECT_EQ(sentinel_index(sentinel_token(41)), 41u);
  EXPECT_EQ(render_sentinel(2), "<extra_id_2>");
}

TEST(Counts, NoiseAndSpanCounts) {
  EXPECT_EQ(noise_token_count(100, 0.15), 15u);
  EXPECT_EQ(noise_token_count(10, 0.15), 2u);  // 1.5 rounds away from zero
  EXPECT_EQ(noise_token_count(3, 0.15), 0u);
  const CorruptionConfig cfg{0.15, 3.0, 0};
  EXPECT_EQ(noise_span_count(100, cfg), 5u);
  EXPECT_EQ(noise_span_count(10, cfg), 1u);
  EXPECT_EQ(noise_span_count(3, cfg), 0u);
}

TEST(PlanSpans, GoldenPlacement) {
  const std::vector<Span> expected{{17, 2}, {37, 4}, {49, 1}, {55, 5}, {91, 3}};
  EXPECT_EQ(plan_spans(100, {0.15, 3.0, 42}, 0), expected);
  const std::vector<Span> second{{3, 1}, {9, 3}, {13, 1}, {16, 2}, {24, 3}, {34, 1}};
  EXPECT_EQ(plan_spans(37, {0.3, 2.0, 9}, 5), second);
}

TEST(PlanSpans, DeterministicPerCounter) {
  const CorruptionConfig cfg{0.15, 3.0, 7};
  EXPECT_EQ(plan_spans(200, cfg, 3), plan_spans(200, cfg, 3));
  std::set<std::vector<Span>> distinct;
  for (std::uint64_t c = 0; c < 20; ++c) distinct.insert(plan_spans(200, cfg, c));
  EXPECT_GT(distinct.size(), 15u);
}

TEST(PlanSpans, Errors) {
  EXPECT_THROW(plan_spans(1, {}, 0), Error);
  EXPECT_THROW(plan_spans(10, {1.0, 3.0, 0}, 0), Error);
  EXPECT_THROW(plan_spans(10, {-0.1, 3.0, 0}, 0), Error);
  EXPECT_THROW(plan_spans(10, {0.15, 0.5, 0}, 0), Error);
  EXPECT_THROW(plan_spans(2, {0.75, 3.0, 0}, 0), Error);  // both tokens noised
  EXPECT_THROW(plan_spans(10, {0.6, 1.0, 0}, 0), Error);  // 6 spans, 4 survivors
}

TEST(PlanSpans, ZeroDensityIsIdentity) {
  const auto tokens = iota_tokens(50);
  const auto pair = corrupt(tokens, {0.0, 3.0, 1}, 0);
  EXPECT_EQ(pair.input_tokens, tokens);
  EXPECT_EQ(pair.target_tokens, std::vector<TokenId>{sentinel_token(0)});
  EXPECT_EQ(reconstruct(pair), tokens);
}

TEST(Corrupt, Example) {
  const auto tokens = iota_tokens(10);
  const std::vector<Span> spans{{3, 3}};
  const auto pair = apply_spans(tokens, spans);
  EXPECT_EQ(pair.input_tokens, (std::vector<TokenId>{0, 1, 2, -1, 6, 7, 8, 9}));
  EXPECT_EQ(pair.target_tokens, (std::vector<TokenId>{-1, 3, 4, 5, -2}));
}

TEST(Corrupt, RejectsSentinelInput) {
  EXPECT_THROW(corrupt(std::vector<TokenId>{1, -1, 3}, {}, 0), Error);
  EXPECT_THROW(apply_spans(iota_tokens(5), std::vector<Span>{{3, 1}, {2, 1}}), Error);
  EXPECT_THROW(apply_spans(iota_tokens(5), std::vector<Span>{{4, 3}}), Error);
}

// Randomized sweep over lengths, densities, span lengths and seeds.
TEST(CorruptProperties, RandomizedSequences) {
  SplitMix64 rng(12345);
  const double densities[] = {0.0, 0.05, 0.15, 0.3};
  const double means[] = {1.0, 2.0, 3.0, 5.0};
  int checked = 0;
  for (int trial = 0; trial < 4000; ++trial) {
    const auto n = static_cast<std::size_t>(2 + uniform_below(rng, 511));
    const CorruptionConfig cfg{densities[uniform_below(rng, 4)], means[uniform_below(rng, 4)],
                               rng()};
    const auto tokens = iota_tokens(n, static_cast<TokenId>(uniform_below(rng, 1000)));
    const auto noise = noise_token_count(n, cfg.noise_density);
    const auto m = noise_span_count(n, cfg);
    if (noise >= n || (m && n - noise + 1 < m)) {
      EXPECT_THROW(plan_spans(n, cfg, 0), Error);
      continue;
    }
    const auto spans = plan_spans(n, cfg, trial);
    ASSERT_EQ(spans.size(), m);
    std::size_t total = 0;
    for (std::size_t k = 0; k < spans.size(); ++k) {
      ASSERT_GE(spans[k].length, 1u);
      total += spans[k].length;
      if (k) ASSERT_GT(spans[k].start, spans[k - 1].start + spans[k - 1].length);
    }
    if (!spans.empty()) ASSERT_LE(spans.back().start + spans.back().length, n);
    ASSERT_EQ(total, noise);

    const auto pair = apply_spans(tokens, spans);
    ASSERT_EQ(reconstruct(pair), tokens);
    std::uint64_t next = 0;
    for (auto t : pair.input_tokens) {
      if (is_sentinel(t)) ASSERT_EQ(sentinel_index(t), next++);
    }
    ++checked;
  }
  EXPECT_GT(checked, 3000);
}

TEST(Reconstruct, DetectsMalformedPairs) {
  // Out-of-order sentinel in the input.
  EXPECT_THROW(reconstruct({{1, -2, 3}, {-1, 2, -2}}), Error);
  // Sentinel in the input but not in the target.
  EXPECT_THROW(reconstruct({{1, -1, 3, -2}, {-1, 2, -3}}), Error);
  // Missing terminal sentinel.
  EXPECT_THROW(reconstruct({{1, -1, 3}, {-1, 2}}), Error);
  // Tokens after the terminal sentinel.
  EXPECT_THROW(reconstruct({{1, -1, 3}, {-1, 2, -2, 9}}), Error);
  // Target not starting with a sentinel.
  EXPECT_THROW(reconstruct({{1, -1, 3}, {5, -1, 2, -2}}), Error);
}

TEST(CorruptText, RendersSentinels) {
  const auto pair = corrupt_text("the quick brown fox jumps over the lazy dog and runs far away",
                                 {0.15, 3.0, 3}, 0);
  EXPECT_EQ(pair.input, "the quick brown fox jumps over <extra_id_0> dog and runs far away");
  EXPECT_EQ(pair.target, "<extra_id_0> the lazy <extra_id_1>");
  EXPECT_THROW(corrupt_text("single", {}, 0), Error);
}

TEST(SplitWords, CollapsesWhitespace) {
  EXPECT_EQ(split_words("  a\tb \n c  "), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(split_words("   ").empty());
}

}  // namespace
}  // namespace taskmix
