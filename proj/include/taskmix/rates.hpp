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

// Sampling-rate policies and the mixture specification.
//
// Mixture file format:
//
//   r_ratio=<R | inf>
//   unsupervised_source=<id>
//   task<TAB>weight
//   <name><TAB><weight>
//   ...
//
// `#` lines are comments. Weights are written with enough digits to read
// back bit-exactly.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "taskmix/error.hpp"
#include "taskmix/prng.hpp"
#include "taskmix/registry.hpp"
#include "taskmix/transfer.hpp"
#include "taskmix/tsv.hpp"

namespace taskmix {

/// Ceiling on the effective example count of one task.
class Cap {
 public:
  /// Throws Error for a zero limit.
  constexpr explicit Cap(std::uint64_t limit) : limit_(limit) {
    if (limit == 0) throw Error("sampling cap must be >= 1");
  }

  static constexpr Cap unlimited() noexcept { return Cap(); }

  constexpr bool finite() const noexcept { return limit_.has_value(); }
  constexpr std::uint64_t limit() const { return limit_.value(); }

  constexpr std::uint64_t apply(std::uint64_t size) const noexcept {
    return limit_ ? std::min(size, *limit_) : size;
  }

  friend constexpr bool operator==(const Cap&, const Cap&) = default;

 private:
  constexpr Cap() noexcept = default;
  std::optional<std::uint64_t> limit_;
};

inline constexpr std::uint64_t kDefaultCapLimit = 300'000;

inline std::string to_string(const Cap& cap) {
  return cap.finite() ? std::to_string(cap.limit()) : std::string("inf");
}

/// "inf" or a positive integer.
inline Cap parse_cap(std::string_view text) {
  const auto t = tsv::trim(text);
  if (t == "inf" || t == "none") return Cap::unlimited();
  const auto v = tsv::parse_u64(t);
  if (!v || *v == 0) throw Error("bad cap '" + std::string(text) + "' (positive integer or inf)");
  return Cap(*v);
}

enum class RateMode : std::uint8_t { CappedProportional, FamilyPair, Uniform };

constexpr std::string_view to_string(RateMode m) noexcept {
  switch (m) {
    case RateMode::CappedProportional: return "CappedProportional";
    case RateMode::FamilyPair: return "FamilyPair";
    case RateMode::Uniform: return "Uniform";
  }
  return "?";
}

struct RatePolicy {
  Cap cap = Cap(kDefaultCapLimit);
  RateMode mode = RateMode::CappedProportional;
};

struct RateEntry {
  std::string task;
  double weight = 0.0;

  friend bool operator==(const RateEntry&, const RateEntry&) = default;
};

/// Per-task sampling weights in registry order.
struct RateTable {
  std::vector<RateEntry> entries;
  bool normalized = false;

  double total() const {
    double sum = 0.0;
    for (const auto& e : entries) sum += e.weight;
    return sum;
  }

  std::optional<double> weight(std::string_view task) const {
    for (const auto& e : entries) {
      if (e.task == task) return e.weight;
    }
    return std::nullopt;
  }

  std::size_t size() const noexcept { return entries.size(); }

  friend bool operator==(const RateTable&, const RateTable&) = default;
};

/// Throws unless every weight is finite and non-negative, names are unique,
/// and (when given) every name is in `reg`.
inline void validate(const RateTable& rt, const Registry* reg = nullptr) {
  std::set<std::string_view> seen;
  for (const auto& e : rt.entries) {
    if (!std::isfinite(e.weight) || e.weight < 0.0) {
      throw Error("rate table: weight of '" + e.task + "' must be finite and >= 0");
    }
    if (!seen.insert(e.task).second) throw Error("rate table: duplicate task '" + e.task + "'");
    if (reg && !reg->contains(e.task)) {
      throw Error("rate table: task '" + e.task + "' is not in the registry");
    }
  }
  if (rt.normalized && std::abs(rt.total() - 1.0) > 1e-9) {
    throw Error("rate table marked normalized but sums to " + tsv::format_double(rt.total()));
  }
}

/// weight(t) = min(train_size(t), cap), unnormalized.
inline RateTable capped_proportional(const Registry& reg, Cap cap) {
  if (reg.empty()) throw Error("capped_proportional: registry is empty");
  RateTable rt;
  rt.entries.reserve(reg.size());
  for (const auto& t : reg) {
    rt.entries.push_back({t.name, static_cast<double>(cap.apply(t.train_size))});
  }
  return rt;
}

inline RateTable uniform_rates(const Registry& reg) {
  if (reg.empty()) throw Error("uniform_rates: registry is empty");
  RateTable rt;
  for (const auto& t : reg) rt.entries.push_back({t.name, 1.0 / static_cast<double>(reg.size())});
  rt.normalized = true;
  return rt;
}

inline RateTable normalize(const RateTable& rt) {
  validate(rt);
  const double sum = rt.total();
  if (!(sum > 0.0)) throw Error("normalize: all weights are zero");
  RateTable out = rt;
  for (auto& e : out.entries) e.weight /= sum;
  out.normalized = true;
  return out;
}

/// Proportional to min(size, cap) within each family, 1:1 between the two
/// families. Pass a finite cap to clip large tasks before balancing.
inline RateTable family_pair_rates(const Registry& reg, Family a, Family b,
                                   Cap cap = Cap::unlimited()) {
  if (a == b) throw Error("family_pair_rates: the two families must differ");
  double mass_a = 0.0;
  double mass_b = 0.0;
  for (const auto& t : reg) {
    if (t.family == a) mass_a += static_cast<double>(cap.apply(t.train_size));
    if (t.family == b) mass_b += static_cast<double>(cap.apply(t.train_size));
  }
  if (mass_a == 0.0 || mass_b == 0.0) {
    throw Error(std::string("family_pair_rates: family ") +
                std::string(to_string(mass_a == 0.0 ? a : b)) + " has no tasks");
  }
  RateTable rt;
  for (const auto& t : reg) {
    if (t.family != a && t.family != b) continue;
    const double mass = t.family == a ? mass_a : mass_b;
    rt.entries.push_back({t.name, 0.5 * static_cast<double>(cap.apply(t.train_size)) / mass});
  }
  rt.normalized = true;
  return rt;
}

// ---------------------------------------------------------------------------
// Supervised + unsupervised combination
// ---------------------------------------------------------------------------

/// Supervised weights plus a raw-text stream drawn R times as often as all
/// supervised tasks together. `supervised` holds the rescaled weights, so
/// supervised mass plus unsupervised_fraction() is 1.
struct MixtureSpec {
  RateTable supervised;
  double r_ratio = 0.0;
  std::string unsupervised_source;

  double unsupervised_fraction() const {
    if (std::isinf(r_ratio)) return 1.0;
    return r_ratio / (r_ratio + 1.0);
  }

  double supervised_fraction() const {
    if (std::isinf(r_ratio)) return 0.0;
    return 1.0 / (r_ratio + 1.0);
  }

  friend bool operator==(const MixtureSpec&, const MixtureSpec&) = default;
};

inline MixtureSpec r_combine(const RateTable& supervised, double r_ratio,
                             std::string unsupervised_source) {
  if (std::isnan(r_ratio) || r_ratio < 0.0) throw Error("r_combine: r_ratio must be >= 0");
  if (!supervised.normalized) throw Error("r_combine: supervised table must be normalized");
  validate(supervised);
  if (r_ratio > 0.0 && unsupervised_source.empty()) {
    throw Error("r_combine: r_ratio > 0 needs an unsupervised source id");
  }
  MixtureSpec mix;
  mix.r_ratio = r_ratio;
  mix.unsupervised_source = std::move(unsupervised_source);
  const double scale = mix.supervised_fraction();
  mix.supervised = supervised;
  for (auto& e : mix.supervised.entries) e.weight *= scale;
  mix.supervised.normalized = r_ratio == 0.0;
  return mix;
}

inline void write_mixture(const MixtureSpec& mix, std::ostream& out) {
  out << "r_ratio=" << tsv::format_double(mix.r_ratio) << '\n';
  out << "unsupervised_source=" << mix.unsupervised_source << '\n';
  out << "task\tweight\n";
  for (const auto& e : mix.supervised.entries) {
    out << e.task << '\t' << tsv::format_double(e.weight) << '\n';
  }
}

inline MixtureSpec parse_mixture(std::istream& in, const std::string& source = "<mixture>") {
  MixtureSpec mix;
  bool have_r = false;
  bool have_source = false;
  bool in_table = false;
  std::size_t line_no = 0;
  while (auto line = tsv::next_line(in, line_no)) {
    const auto& text = line->text;
    if (!in_table) {
      const auto eq = text.find('=');
      if (eq != std::string::npos && text.find('\t') == std::string::npos) {
        const auto key = tsv::trim(std::string_view(text).substr(0, eq));
        const auto value = std::string(tsv::trim(std::string_view(text).substr(eq + 1)));
        if (key == "r_ratio") {
          const auto r = tsv::parse_double(value);
          if (!r || *r < 0.0) throw ParseError(source, line->number, "bad r_ratio '" + value + "'");
          mix.r_ratio = *r;
          have_r = true;
        } else if (key == "unsupervised_source") {
          mix.unsupervised_source = value;
          have_source = true;
        } else {
          throw ParseError(source, line->number, "unknown header key '" + std::string(key) + "'");
        }
        continue;
      }
      const auto cells = tsv::split(text);
      if (cells.size() == 2 && tsv::trim(cells[0]) == "task" && tsv::trim(cells[1]) == "weight") {
        in_table = true;
        continue;
      }
      throw ParseError(source, line->number, "expected 'key=value' or the 'task\\tweight' header");
    }
    const auto cells = tsv::split(text);
    if (cells.size() != 2) {
      throw ParseError(source, line->number, "expected 2 columns (task, weight)");
    }
    const auto w = tsv::parse_double(cells[1]);
    if (!w || !std::isfinite(*w) || *w < 0.0) {
      throw ParseError(source, line->number, "bad weight '" + cells[1] + "'");
    }
    mix.supervised.entries.push_back({std::string(tsv::trim(cells[0])), *w});
  }
  if (!have_r) throw ParseError(source, 0, "missing r_ratio= header");
  if (!have_source) throw ParseError(source, 0, "missing unsupervised_source= header");
  mix.supervised.normalized = std::abs(mix.supervised.total() - 1.0) <= 1e-9;
  try {
    validate(mix.supervised);
  } catch (const Error& e) {
    throw ParseError(source, 0, e.what());
  }
  return mix;
}

inline MixtureSpec load_mixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mixture '" + path.string() + "'");
  return parse_mixture(in, path.string());
}

// ---------------------------------------------------------------------------
// Task selection
// ---------------------------------------------------------------------------

/// Nested random task subsets: one Fisher-Yates shuffle of the registry
/// (splitmix64 seeded with `seed`), then prefixes of the requested sizes.
/// Each subset keeps registry order.
inline std::vector<Registry> random_subset_chain(const Registry& reg,
                                                 std::span<const std::size_t> sizes,
                                                 std::uint64_t seed) {
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] < 1 || sizes[k] > reg.size()) {
      throw Error("random_subset_chain: size " + std::to_string(sizes[k]) + " outside [1, " +
                  std::to_string(reg.size()) + "]");
    }
    if (k > 0 && sizes[k] <= sizes[k - 1]) {
      throw Error("random_subset_chain: sizes must be strictly ascending");
    }
  }
  const auto order = shuffled_indices(reg.size(), seed);
  std::vector<Registry> chain;
  for (const auto size : sizes) {
    std::vector<std::uint32_t> picked(order.begin(), order.begin() + static_cast<long>(size));
    std::sort(picked.begin(), picked.end());
    std::vector<TaskSpec> tasks;
    tasks.reserve(size);
    for (auto i : picked) tasks.push_back(reg[i]);
    chain.emplace_back(std::move(tasks));
  }
  return chain;
}

/// The `top_k` matrix families by delta_avg, ties broken by family
/// declaration order. Matrix family names must be Family names.
inline std::vector<Family> best_effort_families(const TransferMatrix& m, std::size_t top_k) {
  if (top_k < 1 || top_k > m.size()) {
    throw Error("best_effort_selection: top_k must be in [1, " + std::to_string(m.size()) + "]");
  }
  std::vector<Family> families;
  for (const auto& name : m.families()) {
    const auto f = try_parse_family(name);
    if (!f) throw Error("best_effort_selection: matrix family '" + name + "' is not a task family");
    families.push_back(*f);
  }
  const auto delta = delta_avg(m);
  std::vector<std::size_t> order(families.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (delta[a] != delta[b]) return delta[a] > delta[b];
    return families[a] < families[b];
  });
  std::vector<Family> top;
  for (std::size_t k = 0; k < top_k; ++k) top.push_back(families[order[k]]);
  return top;
}

/// Every registry task whose family is among the best `top_k`.
inline Registry best_effort_selection(const TransferMatrix& m, const Registry& reg,
                                      std::size_t top_k) {
  const auto present = reg.families();
  for (const auto& name : m.families()) {
    const auto f = try_parse_family(name);
    if (!f || std::find(present.begin(), present.end(), *f) == present.end()) {
      throw Error("best_effort_selection: matrix family '" + name + "' has no registry tasks");
    }
  }
  const auto top = best_effort_families(m, top_k);
  return filter_by_family(reg, std::span<const Family>(top));
}

}  // namespace taskmix
