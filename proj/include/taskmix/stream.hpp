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

// Deterministic weighted interleaving of example sources.
//
// Every draw is an independent categorical choice over the mixture lanes:
// the unsupervised lane (probability R/(R+1)) followed by the supervised
// tasks with positive weight, in mixture order. Draw t of shard s uses
//
//   u_t = to_unit_interval(splitmix64_at(combine_key(seed, s), t))
//
// and picks the first lane whose cumulative probability exceeds u_t. Within
// a lane, examples are served in a fresh Fisher-Yates order per epoch,
// keyed by combine_key(combine_key(seed, fnv1a64(task)), epoch).
//
// Because selection is counter-based, the whole stream state is the draw
// counter plus one (position, epoch) cursor per lane.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "taskmix/corruption.hpp"
#include "taskmix/error.hpp"
#include "taskmix/prng.hpp"
#include "taskmix/rates.hpp"
#include "taskmix/registry.hpp"
#include "taskmix/source.hpp"

namespace taskmix {

struct StreamConfig {
  std::uint64_t seed = 0;
  std::uint64_t shard_index = 0;
  std::uint64_t shard_count = 1;
  std::size_t batch_size = 1;
  std::size_t max_input_len = std::numeric_limits<std::size_t>::max();
  std::size_t max_target_len = std::numeric_limits<std::size_t>::max();
};

struct TaskCursor {
  std::uint64_t position = 0;
  std::uint64_t epoch = 0;

  friend bool operator==(const TaskCursor&, const TaskCursor&) = default;
};

struct StreamState {
  static constexpr int kVersion = 1;

  std::uint64_t seed = 0;
  std::uint64_t shard_index = 0;
  std::uint64_t shard_count = 1;
  std::uint64_t key = 0;
  std::uint64_t draws = 0;
  std::vector<std::pair<std::string, TaskCursor>> cursors;

  friend bool operator==(const StreamState&, const StreamState&) = default;
};

/// Keeps the first `limit` whitespace-separated words.
inline std::string truncate_words(const std::string& text, std::size_t limit, bool& truncated) {
  const auto words = split_words(text);
  if (words.size() <= limit) return text;
  truncated = true;
  std::string out;
  for (std::size_t i = 0; i < limit; ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

class MixtureStream {
 public:
  struct Lane {
    std::string name;
    bool unsupervised = false;
    double probability = 0.0;
    std::shared_ptr<const ExampleSource> source;
  };

  MixtureStream(const MixtureSpec& mix, const SourceMap& sources, const StreamConfig& cfg)
      : cfg_(cfg) {
    if (cfg_.shard_count == 0) throw Error("stream: shard_count must be >= 1");
    if (cfg_.shard_index >= cfg_.shard_count) {
      throw Error("stream: shard_index " + std::to_string(cfg_.shard_index) +
                  " out of range for " + std::to_string(cfg_.shard_count) + " shards");
    }
    if (cfg_.batch_size == 0) throw Error("stream: batch_size must be >= 1");
    if (cfg_.max_input_len == 0 || cfg_.max_target_len == 0) {
      throw Error("stream: length budgets must be >= 1");
    }
    if (std::isnan(mix.r_ratio) || mix.r_ratio < 0.0) throw Error("stream: bad r_ratio");
    validate(mix.supervised);

    for (const auto& [name, src] : sources) {
      const bool is_unsup = mix.r_ratio > 0.0 && name == mix.unsupervised_source;
      if (!is_unsup && !mix.supervised.weight(name)) {
        throw Error("stream: source '" + name + "' has no entry in the mixture");
      }
      if (!src) throw Error("stream: source '" + name + "' is null");
    }

    const auto lookup = [&](const std::string& name) {
      const auto it = sources.find(name);
      if (it == sources.end()) throw Error("stream: missing source for '" + name + "'");
      if (it->second->size() == 0) throw Error("stream: source '" + name + "' is empty");
      return it->second;
    };

    const double unsup = mix.unsupervised_fraction();
    if (unsup > 0.0) {
      if (mix.unsupervised_source.empty()) {
        throw Error("stream: r_ratio > 0 but the mixture names no unsupervised source");
      }
      lanes_.push_back({mix.unsupervised_source, true, unsup, lookup(mix.unsupervised_source)});
    }
    const double supervised_mass = mix.supervised.total();
    if (unsup < 1.0) {
      if (!(supervised_mass > 0.0)) throw Error("stream: mixture has no positive weight");
      for (const auto& e : mix.supervised.entries) {
        if (e.weight <= 0.0) continue;
        lanes_.push_back({e.task, false, (1.0 - unsup) * e.weight / supervised_mass, lookup(e.task)});
      }
    }

    cumulative_.resize(lanes_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < lanes_.size(); ++i) {
      acc += lanes_[i].probability;
      cumulative_[i] = acc;
    }
    cumulative_.back() = 1.0;

    key_ = combine_key(cfg_.seed, cfg_.shard_index);
    cursors_.assign(lanes_.size(), TaskCursor{});
    orders_.resize(lanes_.size());
  }

  const std::vector<Lane>& lanes() const noexcept { return lanes_; }
  const StreamConfig& config() const noexcept { return cfg_; }
  std::uint64_t draws() const noexcept { return draws_; }

  /// Lane chosen at draw `t`; pure function of (seed, shard, t).
  std::size_t lane_at(std::uint64_t t) const {
    const double u = to_unit_interval(splitmix64_at(key_, t));
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return static_cast<std::size_t>(std::min<std::ptrdiff_t>(
        it - cumulative_.begin(), static_cast<std::ptrdiff_t>(lanes_.size()) - 1));
  }

  ExampleRecord next() {
    const auto lane = lane_at(draws_);
    auto& cursor = cursors_[lane];
    const auto& src = *lanes_[lane].source;
    if (cursor.position == src.size()) {
      if (!src.repeatable()) {
        throw SourceExhausted("stream: source '" + lanes_[lane].name + "' is exhausted");
      }
      ++cursor.epoch;
      cursor.position = 0;
    }
    const auto& order = epoch_order(lane, cursor.epoch);
    const auto index = order[cursor.position];
    ExampleRecord rec = src.get(index, draws_);
    ++cursor.position;
    ++draws_;

    if (cfg_.max_input_len != std::numeric_limits<std::size_t>::max()) {
      rec.inputs = truncate_words(rec.inputs, cfg_.max_input_len, rec.truncated);
    }
    if (cfg_.max_target_len != std::numeric_limits<std::size_t>::max()) {
      rec.targets = truncate_words(rec.targets, cfg_.max_target_len, rec.truncated);
    }
    return rec;
  }

  std::vector<ExampleRecord> next_batch() {
    std::vector<ExampleRecord> batch;
    batch.reserve(cfg_.batch_size);
    for (std::size_t i = 0; i < cfg_.batch_size; ++i) batch.push_back(next());
    return batch;
  }

  StreamState state() const {
    StreamState s{cfg_.seed, cfg_.shard_index, cfg_.shard_count, key_, draws_, {}};
    for (std::size_t i = 0; i < lanes_.size(); ++i) s.cursors.emplace_back(lanes_[i].name, cursors_[i]);
    return s;
  }

  /// Resumes from a snapshot taken on a stream with the same mixture,
  /// sources and config.
  void restore(const StreamState& s) {
    if (s.seed != cfg_.seed || s.shard_index != cfg_.shard_index ||
        s.shard_count != cfg_.shard_count || s.key != key_) {
      throw Error("stream: snapshot belongs to a different seed or shard");
    }
    if (s.cursors.size() != lanes_.size()) throw Error("stream: snapshot lane count mismatch");
    for (std::size_t i = 0; i < lanes_.size(); ++i) {
      if (s.cursors[i].first != lanes_[i].name) {
        throw Error("stream: snapshot lane '" + s.cursors[i].first + "' does not match '" +
                    lanes_[i].name + "'");
      }
      if (s.cursors[i].second.position > lanes_[i].source->size()) {
        throw Error("stream: snapshot cursor of '" + lanes_[i].name + "' is out of range");
      }
    }
    draws_ = s.draws;
    for (std::size_t i = 0; i < lanes_.size(); ++i) cursors_[i] = s.cursors[i].second;
  }

 private:
  const std::vector<std::uint32_t>& epoch_order(std::size_t lane, std::uint64_t epoch) {
    auto& cached = orders_[lane];
    if (!cached || cached->first != epoch) {
      const auto task_key = combine_key(cfg_.seed, fnv1a64(lanes_[lane].name));
      cached.emplace(epoch,
                     shuffled_indices(lanes_[lane].source->size(), combine_key(task_key, epoch)));
    }
    return cached->second;
  }

  StreamConfig cfg_;
  std::vector<Lane> lanes_;
  std::vector<double> cumulative_;
  std::uint64_t key_ = 0;
  std::uint64_t draws_ = 0;
  std::vector<TaskCursor> cursors_;
  std::vector<std::optional<std::pair<std::uint64_t, std::vector<std::uint32_t>>>> orders_;
};

inline MixtureStream open_stream(const MixtureSpec& mix, const SourceMap& sources,
                                 const StreamConfig& cfg) {
  return MixtureStream(mix, sources, cfg);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// JSON object with keys task, family, inputs, targets, index, truncated,
/// in that order, on one line.
inline std::string to_jsonl(const ExampleRecord& rec) {
  nlohmann::ordered_json j;
  j["task"] = rec.task;
  j["family"] = rec.family;
  j["inputs"] = rec.inputs;
  j["targets"] = rec.targets;
  j["index"] = rec.index;
  j["truncated"] = rec.truncated;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

inline ExampleRecord record_from_json(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  ExampleRecord rec;
  rec.task = j.at("task").get<std::string>();
  rec.family = j.at("family").get<std::string>();
  rec.inputs = j.at("inputs").get<std::string>();
  rec.targets = j.at("targets").get<std::string>();
  rec.index = j.at("index").get<std::uint64_t>();
  rec.truncated = j.at("truncated").get<bool>();
  return rec;
}

/// Snapshot format (JSON, keys in this order):
///   {"format":"taskmix-stream-state","version":1,"seed":..,"shard_index":..,
///    "shard_count":..,"key":..,"draws":..,
///    "cursors":[{"lane":..,"position":..,"epoch":..},...]}
/// Integers are unsigned 64-bit decimal.
inline std::string serialize_state(const StreamState& s) {
  nlohmann::ordered_json j;
  j["format"] = "taskmix-stream-state";
  j["version"] = StreamState::kVersion;
  j["seed"] = s.seed;
  j["shard_index"] = s.shard_index;
  j["shard_count"] = s.shard_count;
  j["key"] = s.key;
  j["draws"] = s.draws;
  auto cursors = nlohmann::ordered_json::array();
  for (const auto& [lane, c] : s.cursors) {
    nlohmann::ordered_json e;
    e["lane"] = lane;
    e["position"] = c.position;
    e["epoch"] = c.epoch;
    cursors.push_back(std::move(e));
  }
  j["cursors"] = std::move(cursors);
  return j.dump() + "\n";
}

inline StreamState deserialize_state(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "taskmix-stream-state") {
      throw Error("stream state: unexpected format tag");
    }
    if (j.at("version").get<int>() != StreamState::kVersion) {
      throw Error("stream state: unsupported version " + j.at("version").dump());
    }
    StreamState s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.shard_index = j.at("shard_index").get<std::uint64_t>();
    s.shard_count = j.at("shard_count").get<std::uint64_t>();
    s.key = j.at("key").get<std::uint64_t>();
    s.draws = j.at("draws").get<std::uint64_t>();
    for (const auto& e : j.at("cursors")) {
      s.cursors.emplace_back(e.at("lane").get<std::string>(),
                             TaskCursor{e.at("position").get<std::uint64_t>(),
                                        e.at("epoch").get<std::uint64_t>()});
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("stream state: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Composition accounting
// ---------------------------------------------------------------------------

struct CompositionReport {
  std::vector<std::pair<std::string, std::uint64_t>> task_counts;
  std::vector<std::pair<std::string, std::uint64_t>> family_counts;
  std::uint64_t unsupervised = 0;
  std::uint64_t total = 0;

  double fraction(std::uint64_t count) const {
    return total ? static_cast<double>(count) / static_cast<double>(total) : 0.0;
  }

  double unsupervised_fraction() const { return fraction(unsupervised); }

  std::uint64_t task_count(std::string_view task) const {
    for (const auto& [name, c] : task_counts) {
      if (name == task) return c;
    }
    return 0;
  }

  std::uint64_t family_count(std::string_view family) const {
    for (const auto& [name, c] : family_counts) {
      if (name == family) return c;
    }
    return 0;
  }
};

/// Draws `n` records and tallies them. Tasks are listed in lane order
/// (unsupervised lane included), families alphabetically.
inline CompositionReport composition_stats(MixtureStream& stream, std::uint64_t n) {
  if (n < 1) throw Error("composition_stats: n must be >= 1");
  const auto& lanes = stream.lanes();
  std::vector<std::uint64_t> per_task(lanes.size(), 0);
  std::map<std::string, std::uint64_t> per_family;
  std::map<std::string, std::size_t, std::less<>> lane_of;
  for (std::size_t i = 0; i < lanes.size(); ++i) lane_of.emplace(lanes[i].name, i);

  CompositionReport report;
  for (std::uint64_t k = 0; k < n; ++k) {
    const auto lane = stream.lane_at(stream.draws());
    const auto rec = stream.next();
    ++per_task[lane];
    if (lanes[lane].unsupervised) {
      ++report.unsupervised;
    } else {
      ++per_family[rec.family];
    }
  }
  report.total = n;
  for (std::size_t i = 0; i < lanes.size(); ++i) report.task_counts.emplace_back(lanes[i].name, per_task[i]);
  if (report.unsupervised) {
    report.family_counts.emplace_back(std::string(kDenoisingFamilyTag), report.unsupervised);
  }
  for (const auto& [f, c] : per_family) report.family_counts.emplace_back(f, c);
  std::sort(report.family_counts.begin(), report.family_counts.end());
  return report;
}

/// TSV `kind name count fraction` with kind in {task, family, unsupervised,
/// total}.
inline void write_composition_tsv(const CompositionReport& r, std::ostream& out) {
  out << "kind\tname\tcount\tfraction\n";
  for (const auto& [name, c] : r.task_counts) {
    out << "task\t" << name << '\t' << c << '\t' << tsv::fixed(r.fraction(c), 6) << '\n';
  }
  for (const auto& [name, c] : r.family_counts) {
    out << "family\t" << name << '\t' << c << '\t' << tsv::fixed(r.fraction(c), 6) << '\n';
  }
  out << "unsupervised\t-\t" << r.unsupervised << '\t' << tsv::fixed(r.unsupervised_fraction(), 6)
      << '\n';
  out << "total\t-\t" << r.total << '\t' << tsv::fixed(1.0, 6) << '\n';
}

/// True iff every shard replays identically and no two shards produce the
/// same first `n` records.
inline bool shard_partition_check(const MixtureSpec& mix, const SourceMap& sources,
                                  std::uint64_t seed, std::uint64_t shard_count, std::uint64_t n) {
  if (shard_count == 0) throw Error("shard_partition_check: shard_count must be >= 1");
  std::vector<std::vector<ExampleRecord>> runs;
  for (std::uint64_t s = 0; s < shard_count; ++s) {
    StreamConfig cfg;
    cfg.seed = seed;
    cfg.shard_index = s;
    cfg.shard_count = shard_count;
    std::vector<ExampleRecord> first;
    std::vector<ExampleRecord> second;
    MixtureStream a(mix, sources, cfg);
    MixtureStream b(mix, sources, cfg);
    for (std::uint64_t k = 0; k < n; ++k) {
      first.push_back(a.next());
      second.push_back(b.next());
    }
    if (first != second) return false;
    runs.push_back(std::move(first));
  }
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (std::size_t j = i + 1; j < runs.size(); ++j) {
      if (runs[i] == runs[j]) return false;
    }
  }
  return true;
}

}  // namespace taskmix
