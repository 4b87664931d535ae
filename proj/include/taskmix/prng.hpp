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

#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string_view>
#include <utility>
#include <vector>

namespace taskmix {

/// Weyl increment of splitmix64.
inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// splitmix64 output finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Folds `value` into the key `key`. Shards, epochs and corruption draws are
/// all keyed through this function.
constexpr std::uint64_t combine_key(std::uint64_t key, std::uint64_t value) noexcept {
  return mix64(key ^ mix64(value + kGoldenGamma));
}

/// 64-bit FNV-1a, used to key per-task state by name.
constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// The i-th (0-based) output of a splitmix64 generator started at `state`,
/// computed without stepping through the earlier outputs.
constexpr std::uint64_t splitmix64_at(std::uint64_t state, std::uint64_t i) noexcept {
  return mix64(state + (i + 1) * kGoldenGamma);
}

/// Maps the top 53 bits onto [0, 1).
constexpr double to_unit_interval(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// splitmix64 (Steele, Lea, Flood). Satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  constexpr explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  constexpr result_type operator()() noexcept {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  constexpr std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// Unbiased integer in [0, bound) by Lemire's multiply-shift with rejection.
/// `bound` must be positive.
inline std::uint64_t uniform_below(SplitMix64& rng, std::uint64_t bound) {
  using u128 = unsigned __int128;
  u128 m = static_cast<u128>(rng()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<u128>(rng()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

/// In-place Fisher-Yates, walking from the back: for i = n-1 .. 1 swap
/// element i with element uniform_below(i + 1).
template <class T>
void fisher_yates(std::vector<T>& items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

/// Seeded permutation of 0..n-1.
inline std::vector<std::uint32_t> shuffled_indices(std::size_t n, std::uint64_t key) {
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), std::uint32_t{0});
  SplitMix64 rng(key);
  fisher_yates(order, rng);
  return order;
}

}  // namespace taskmix
