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

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "taskmix/corruption.hpp"
#include "taskmix/error.hpp"
#include "taskmix/prng.hpp"
#include "taskmix/registry.hpp"

namespace taskmix {

/// Random-access example provider for one mixture lane. Implementations
/// must be immutable after construction; one source may back several
/// shard streams at once.
class ExampleSource {
 public:
  virtual ~ExampleSource() = default;

  virtual std::size_t size() const = 0;

  /// Whether the stream may start a new epoch after `size()` draws.
  virtual bool repeatable() const { return true; }

  /// Record at `index`. `draw` is the stream-wide draw counter, for sources
  /// whose output depends on when they are sampled.
  virtual ExampleRecord get(std::size_t index, std::uint64_t draw) const = 0;
};

using SourceMap = std::map<std::string, std::shared_ptr<const ExampleSource>, std::less<>>;

/// Pre-materialised records.
class RecordSource final : public ExampleSource {
 public:
  explicit RecordSource(std::vector<ExampleRecord> records, bool repeatable = true)
      : records_(std::move(records)), repeatable_(repeatable) {}

  std::size_t size() const override { return records_.size(); }
  bool repeatable() const override { return repeatable_; }

  ExampleRecord get(std::size_t index, std::uint64_t) const override {
    auto rec = records_.at(index);
    rec.index = index;
    return rec;
  }

 private:
  std::vector<ExampleRecord> records_;
  bool repeatable_;
};

/// Stand-in for a real dataset: record i fills every template placeholder
/// `p` with "p_i".
class SyntheticTaskSource final : public ExampleSource {
 public:
  SyntheticTaskSource(TaskSpec task, std::size_t size) : task_(std::move(task)), size_(size) {
    if (size_ == 0) throw Error("synthetic source for '" + task_.name + "' needs size >= 1");
  }

  std::size_t size() const override { return size_; }

  ExampleRecord get(std::size_t index, std::uint64_t) const override {
    FieldMap fields;
    const auto suffix = "_" + std::to_string(index);
    for (const auto& f : task_.input_template.fields()) fields[f] = f + suffix;
    for (const auto& f : task_.target_template.fields()) fields[f] = f + suffix;
    return format_example(task_, fields, index);
  }

 private:
  TaskSpec task_;
  std::size_t size_;
};

inline constexpr std::string_view kDenoisingFamilyTag = "DENOISE";

/// Raw-text documents turned into span-corruption examples. The draw
/// counter keys the corruption, so a document revisited in a later epoch is
/// corrupted differently.
class DenoisingSource final : public ExampleSource {
 public:
  DenoisingSource(std::string id, std::vector<std::string> documents, CorruptionConfig cfg)
      : id_(std::move(id)), documents_(std::move(documents)), cfg_(cfg) {
    validate(cfg_);
    for (std::size_t i = 0; i < documents_.size(); ++i) {
      if (split_words(documents_[i]).size() < 2) {
        throw Error("denoising source '" + id_ + "': document " + std::to_string(i) +
                    " has fewer than 2 words");
      }
    }
  }

  std::size_t size() const override { return documents_.size(); }

  ExampleRecord get(std::size_t index, std::uint64_t draw) const override {
    const auto pair = corrupt_text(documents_.at(index), cfg_, draw);
    ExampleRecord rec;
    rec.task = id_;
    rec.family = std::string(kDenoisingFamilyTag);
    rec.inputs = pair.input;
    rec.targets = pair.target;
    rec.index = index;
    return rec;
  }

 private:
  std::string id_;
  std::vector<std::string> documents_;
  CorruptionConfig cfg_;
};

/// Deterministic filler text ("w17 w3 ...") for demos and tests; document
/// lengths are uniform in [min_words, max_words].
inline std::vector<std::string> synthetic_corpus(std::size_t documents, std::uint64_t seed,
                                                 std::size_t min_words = 16,
                                                 std::size_t max_words = 64,
                                                 std::uint64_t vocabulary = 1000) {
  if (min_words < 2 || max_words < min_words || vocabulary == 0) {
    throw Error("synthetic_corpus: bad length or vocabulary bounds");
  }
  SplitMix64 rng(seed);
  std::vector<std::string> docs;
  docs.reserve(documents);
  for (std::size_t d = 0; d < documents; ++d) {
    const auto len = min_words + uniform_below(rng, max_words - min_words + 1);
    std::string doc;
    for (std::size_t w = 0; w < len; ++w) {
      if (w) doc += ' ';
      doc += 'w';
      doc += std::to_string(uniform_below(rng, vocabulary));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

/// One SyntheticTaskSource per registry task, each with
/// min(train_size, max_size) records.
inline SourceMap synthetic_sources(const Registry& reg, std::size_t max_size) {
  SourceMap sources;
  for (const auto& t : reg) {
    const auto size = static_cast<std::size_t>(std::min<std::uint64_t>(t.train_size, max_size));
    sources.emplace(t.name, std::make_shared<SyntheticTaskSource>(t, size));
  }
  return sources;
}

}  // namespace taskmix
