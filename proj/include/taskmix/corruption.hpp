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

// Span-corruption denoising examples.
//
// A sequence of n tokens loses round(n * density) of them, grouped into
// max(1, round(n * density / mean_span_length)) contiguous spans that never
// touch. Each span is replaced in the input by a sentinel; the target lists
// every sentinel followed by the tokens it replaced, then one terminal
// sentinel:
//
//   input:  a b c <extra_id_0> g h i j
//   target: <extra_id_0> d e f <extra_id_1>
//
// Span placement for draw `c` uses splitmix64 keyed by
// combine_key(seed, c):
//   1. span lengths: m-1 distinct cut points in [1, noise) split the noise
//      budget into m positive parts;
//   2. gaps: the s = n - noise surviving tokens go into m+1 gaps, inner
//      gaps >= 1, by choosing m distinct bar positions among
//      (s - (m-1)) + m slots.
// Both draws use sample_sorted_distinct below, in that order.

#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "taskmix/error.hpp"
#include "taskmix/prng.hpp"

namespace taskmix {

struct CorruptionConfig {
  double noise_density = 0.15;
  double mean_span_length = 3.0;
  std::uint64_t seed = 0;
};

/// Token ids are non-negative; sentinel k is encoded as -(k + 1).
using TokenId = std::int64_t;

constexpr TokenId sentinel_token(std::uint64_t k) noexcept {
  return -static_cast<TokenId>(k) - 1;
}

constexpr bool is_sentinel(TokenId t) noexcept { return t < 0; }

constexpr std::uint64_t sentinel_index(TokenId t) noexcept {
  return static_cast<std::uint64_t>(-(t + 1));
}

inline std::string render_sentinel(std::uint64_t k) {
  return "<extra_id_" + std::to_string(k) + ">";
}

struct Span {
  std::size_t start = 0;
  std::size_t length = 0;

  friend auto operator<=>(const Span&, const Span&) = default;
};

struct DenoisingPair {
  std::vector<TokenId> input_tokens;
  std::vector<TokenId> target_tokens;

  friend bool operator==(const DenoisingPair&, const DenoisingPair&) = default;
};

/// round(n * density), half away from zero.
inline std::size_t noise_token_count(std::size_t n, double density) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * density));
}

/// max(1, round(n * density / mean_span_length)) when any token is noised.
inline std::size_t noise_span_count(std::size_t n, const CorruptionConfig& cfg) {
  const auto noise = noise_token_count(n, cfg.noise_density);
  if (noise == 0) return 0;
  const auto m = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * cfg.noise_density / cfg.mean_span_length));
  return std::clamp<std::size_t>(m, 1, noise);
}

/// k distinct values from [0, range), ascending. Partial Fisher-Yates: for
/// i < k swap slot i with slot i + uniform_below(range - i).
inline std::vector<std::size_t> sample_sorted_distinct(SplitMix64& rng, std::size_t range,
                                                       std::size_t k) {
  std::vector<std::size_t> pool(range);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_below(rng, range - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

inline void validate(const CorruptionConfig& cfg) {
  if (!(cfg.noise_density >= 0.0 && cfg.noise_density < 1.0)) {
    throw Error("corruption: noise_density must be in [0, 1)");
  }
  if (!(cfg.mean_span_length >= 1.0) || !std::isfinite(cfg.mean_span_length)) {
    throw Error("corruption: mean_span_length must be >= 1");
  }
}

/// Sorted, non-touching spans for a sequence of length n.
inline std::vector<Span> plan_spans(std::size_t n, const CorruptionConfig& cfg,
                                    std::uint64_t draw_counter) {
  validate(cfg);
  if (n < 2) throw Error("plan_spans: sequence length must be >= 2, got " + std::to_string(n));
  const auto noise = noise_token_count(n, cfg.noise_density);
  if (noise >= n) {
    throw Error("plan_spans: density " + std::to_string(cfg.noise_density) +
                " leaves no surviving token in a sequence of " + std::to_string(n));
  }
  if (noise == 0) return {};
  const auto spans = noise_span_count(n, cfg);
  const auto survivors = n - noise;
  if (survivors + 1 < spans) {
    throw Error("plan_spans: " + std::to_string(spans) + " spans need " +
                std::to_string(spans - 1) + " separators but only " + std::to_string(survivors) +
                " tokens survive");
  }

  SplitMix64 rng(combine_key(cfg.seed, draw_counter));

  std::vector<std::size_t> lengths;
  lengths.reserve(spans);
  {
    const auto cuts = sample_sorted_distinct(rng, noise - 1, spans - 1);
    std::size_t prev = 0;
    for (auto c : cuts) {
      lengths.push_back(c + 1 - prev);
      prev = c + 1;
    }
    lengths.push_back(noise - prev);
  }

  std::vector<std::size_t> gaps(spans + 1);
  {
    const auto free = survivors - (spans - 1);
    const auto bars = sample_sorted_distinct(rng, free + spans, spans);
    std::size_t prev = 0;
    for (std::size_t k = 0; k < spans; ++k) {
      gaps[k] = bars[k] - prev;
      prev = bars[k] + 1;
    }
    gaps[spans] = free + spans - prev;
    for (std::size_t k = 1; k < spans; ++k) gaps[k] += 1;
  }

  std::vector<Span> out;
  out.reserve(spans);
  std::size_t pos = gaps[0];
  for (std::size_t k = 0; k < spans; ++k) {
    out.push_back({pos, lengths[k]});
    pos += lengths[k] + gaps[k + 1];
  }
  return out;
}

/// Replaces `spans` (sorted, disjoint) by sentinels 0, 1, ...
inline DenoisingPair apply_spans(std::span<const TokenId> tokens, std::span<const Span> spans) {
  DenoisingPair pair;
  std::size_t pos = 0;
  std::uint64_t k = 0;
  for (const auto& s : spans) {
    if (s.start < pos || s.length == 0 || s.start + s.length > tokens.size()) {
      throw Error("apply_spans: spans must be sorted, disjoint, non-empty and in range");
    }
    pair.input_tokens.insert(pair.input_tokens.end(), tokens.begin() + static_cast<long>(pos),
                             tokens.begin() + static_cast<long>(s.start));
    pair.input_tokens.push_back(sentinel_token(k));
    pair.target_tokens.push_back(sentinel_token(k));
    pair.target_tokens.insert(pair.target_tokens.end(),
                              tokens.begin() + static_cast<long>(s.start),
                              tokens.begin() + static_cast<long>(s.start + s.length));
    pos = s.start + s.length;
    ++k;
  }
  pair.input_tokens.insert(pair.input_tokens.end(), tokens.begin() + static_cast<long>(pos),
                           tokens.end());
  pair.target_tokens.push_back(sentinel_token(k));
  return pair;
}

inline DenoisingPair corrupt(std::span<const TokenId> tokens, const CorruptionConfig& cfg,
                             std::uint64_t draw_counter) {
  for (auto t : tokens) {
    if (is_sentinel(t)) throw Error("corrupt: token ids must be non-negative");
  }
  const auto spans = plan_spans(tokens.size(), cfg, draw_counter);
  return apply_spans(tokens, spans);
}

/// Inverse of corrupt().
inline std::vector<TokenId> reconstruct(const DenoisingPair& pair) {
  std::uint64_t expected = 0;
  for (auto t : pair.input_tokens) {
    if (!is_sentinel(t)) continue;
    if (sentinel_index(t) != expected) {
      throw Error("reconstruct: malformed sentinel ordering in input (found " +
                  render_sentinel(sentinel_index(t)) + ", expected " + render_sentinel(expected) +
                  ")");
    }
    ++expected;
  }
  const auto spans = expected;

  // Span contents from the target, indexed by sentinel.
  std::vector<std::span<const TokenId>> contents;
  const auto& target = pair.target_tokens;
  std::size_t i = 0;
  std::uint64_t next = 0;
  while (i < target.size()) {
    if (!is_sentinel(target[i]) || sentinel_index(target[i]) != next) {
      if (next < spans) {
        throw Error("reconstruct: " + render_sentinel(next) +
                    " appears in the input but not in order in the target");
      }
      throw Error("reconstruct: malformed target after the terminal sentinel");
    }
    std::size_t j = i + 1;
    while (j < target.size() && !is_sentinel(target[j])) ++j;
    if (next == spans) {
      if (i + 1 != target.size()) throw Error("reconstruct: tokens after the terminal sentinel");
    } else {
      contents.emplace_back(target.data() + i + 1, j - i - 1);
    }
    ++next;
    i = j;
  }
  if (next < spans) {
    throw Error("reconstruct: " + render_sentinel(next) +
                " appears in the input but not in the target");
  }
  if (next != spans + 1) throw Error("reconstruct: missing terminal sentinel");

  std::vector<TokenId> out;
  for (auto t : pair.input_tokens) {
    if (is_sentinel(t)) {
      const auto& c = contents[sentinel_index(t)];
      out.insert(out.end(), c.begin(), c.end());
    } else {
      out.push_back(t);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Whitespace text adapter
// ---------------------------------------------------------------------------

inline std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  const auto space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  while (i < text.size()) {
    while (i < text.size() && space(text[i])) ++i;
    const auto start = i;
    while (i < text.size() && !space(text[i])) ++i;
    if (i > start) words.emplace_back(text.substr(start, i - start));
  }
  return words;
}

struct TextDenoisingPair {
  std::string input;
  std::string target;

  friend bool operator==(const TextDenoisingPair&, const TextDenoisingPair&) = default;
};

/// Renders token positions back to words, sentinels as <extra_id_k>.
inline std::string render_tokens(std::span<const TokenId> tokens,
                                 std::span<const std::string> words) {
  std::string out;
  for (auto t : tokens) {
    if (!out.empty()) out += ' ';
    out += is_sentinel(t) ? render_sentinel(sentinel_index(t)) : words[static_cast<std::size_t>(t)];
  }
  return out;
}

/// Corrupts whitespace-separated words. Word i is token id i, so the
/// span plan is exactly the one corrupt() would use for the same length.
inline TextDenoisingPair corrupt_text(std::string_view text, const CorruptionConfig& cfg,
                                      std::uint64_t draw_counter) {
  const auto words = split_words(text);
  std::vector<TokenId> ids(words.size());
  std::iota(ids.begin(), ids.end(), TokenId{0});
  const auto pair = corrupt(ids, cfg, draw_counter);
  return {render_tokens(pair.input_tokens, words), render_tokens(pair.target_tokens, words)};
}

}  // namespace taskmix
