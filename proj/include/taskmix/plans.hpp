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

// Experiment manifests and compute accounting.
//
// A manifest describes one training run: which mixture to build (as a
// reference that materialize() turns into a MixtureSpec against a
// registry), for how many steps, at what batch size. Nothing here trains.

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "taskmix/error.hpp"
#include "taskmix/rates.hpp"
#include "taskmix/registry.hpp"

namespace taskmix {

inline constexpr int kManifestSchemaVersion = 1;

/// Default raw-text stream id used by generated plans.
inline constexpr std::string_view kDefaultUnsupervisedSource = "c4";

/// How to build a run's mixture from a registry. Selection precedence:
/// `tasks`, then `families`, then `collection`, else the whole registry.
struct MixtureRef {
  RateMode mode = RateMode::CappedProportional;
  std::vector<std::string> families;
  std::vector<std::string> tasks;
  std::string collection;
  Cap cap = Cap::unlimited();
  double r_ratio = 0.0;
  std::string unsupervised_source;
};

struct ExperimentManifest {
  std::string id;
  MixtureRef mixture;
  std::uint64_t train_steps = 0;
  std::uint64_t batch_size = 0;
  std::string learning_rate_note;
  std::string eval_suite;
  std::optional<std::uint64_t> pretrain_steps;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> subset_size;
};

inline void validate(const ExperimentManifest& m) {
  if (m.train_steps == 0 || m.batch_size == 0) {
    throw Error("manifest '" + m.id + "': train_steps and batch_size must be positive");
  }
}

/// Model count quoted in prose for the 8-family pairwise study; the
/// F + F(F-1)/2 formula gives 36.
inline constexpr std::size_t kQuotedPairwiseModelCount = 34;

inline std::size_t pairwise_model_count(std::size_t families) {
  return families + families * (families - 1) / 2;
}

/// One intra-family run per family, then one run per unordered pair
/// (i < j in the given order).
inline std::vector<ExperimentManifest> plan_pairwise(std::span<const std::string> families,
                                                     std::uint64_t steps, std::uint64_t batch) {
  if (families.empty()) throw Error("plan_pairwise: need at least one family");
  for (const auto& f : families) parse_family(f);
  std::vector<ExperimentManifest> plan;
  const auto add = [&](std::string id, RateMode mode, std::vector<std::string> fams) {
    ExperimentManifest m;
    m.id = std::move(id);
    m.mixture.mode = mode;
    m.mixture.families = std::move(fams);
    m.train_steps = steps;
    m.batch_size = batch;
    m.learning_rate_note = "constant 1e-3; fine-tune from a pre-trained checkpoint";
    m.eval_suite = "family-average";
    validate(m);
    plan.push_back(std::move(m));
  };
  for (const auto& f : families) add("intra-" + f, RateMode::CappedProportional, {f});
  for (std::size_t i = 0; i < families.size(); ++i) {
    for (std::size_t j = i + 1; j < families.size(); ++j) {
      add("pair-" + families[i] + "-" + families[j], RateMode::FamilyPair,
          {families[i], families[j]});
    }
  }
  return plan;
}

/// sizes x seeds x batches pre-training runs over nested random subsets.
/// Order: seed, then size, then batch.
inline std::vector<ExperimentManifest> plan_scaling(
    const Registry& reg, std::span<const std::size_t> sizes, std::span<const std::uint64_t> seeds,
    double r_ratio, std::uint64_t steps, std::span<const std::uint64_t> batches,
    Cap cap = Cap(kDefaultCapLimit),
    std::string unsupervised_source = std::string(kDefaultUnsupervisedSource)) {
  if (std::isnan(r_ratio) || r_ratio < 0.0) throw Error("plan_scaling: r_ratio must be >= 0");
  std::vector<ExperimentManifest> plan;
  for (const auto seed : seeds) {
    const auto chain = random_subset_chain(reg, sizes, seed);
    for (std::size_t k = 0; k < chain.size(); ++k) {
      for (const auto batch : batches) {
        ExperimentManifest m;
        m.id = "scaling-n" + std::to_string(sizes[k]) + "-seed" + std::to_string(seed) + "-b" +
               std::to_string(batch);
        m.mixture.mode = RateMode::CappedProportional;
        for (const auto& t : chain[k]) m.mixture.tasks.push_back(t.name);
        m.mixture.cap = cap;
        m.mixture.r_ratio = r_ratio;
        m.mixture.unsupervised_source = r_ratio > 0.0 ? unsupervised_source : std::string();
        m.train_steps = steps;
        m.batch_size = batch;
        m.learning_rate_note = "pre-training schedule";
        m.eval_suite = "superglue";
        m.seed = seed;
        m.subset_size = sizes[k];
        validate(m);
        plan.push_back(std::move(m));
      }
    }
  }
  return plan;
}

/// One fine-tuning run per pre-training checkpoint.
inline std::vector<ExperimentManifest> plan_sample_efficiency(
    std::span<const std::uint64_t> checkpoints, std::uint64_t finetune_steps, std::uint64_t batch,
    std::string eval_collection = "SuperGLUE") {
  for (std::size_t i = 1; i < checkpoints.size(); ++i) {
    if (checkpoints[i] <= checkpoints[i - 1]) {
      throw Error("plan_sample_efficiency: checkpoints must be strictly ascending");
    }
  }
  std::vector<ExperimentManifest> plan;
  for (const auto ckpt : checkpoints) {
    ExperimentManifest m;
    m.id = "sample-efficiency-" + std::to_string(ckpt);
    m.mixture.mode = RateMode::CappedProportional;
    m.mixture.collection = eval_collection;
    m.train_steps = finetune_steps;
    m.batch_size = batch;
    m.learning_rate_note = "fine-tune from the pre-training checkpoint";
    m.eval_suite = "superglue";
    m.pretrain_steps = ckpt;
    validate(m);
    plan.push_back(std::move(m));
  }
  return plan;
}

/// Builds the mixture a manifest refers to.
inline MixtureSpec materialize(const MixtureRef& ref, const Registry& reg) {
  Registry selected;
  if (!ref.tasks.empty()) {
    selected = select_tasks(reg, ref.tasks);
  } else if (!ref.families.empty() && ref.mode != RateMode::FamilyPair) {
    selected = filter_by_family(reg, ref.families);
  } else if (!ref.collection.empty()) {
    std::vector<TaskSpec> kept;
    for (const auto& t : reg) {
      if (t.collection == ref.collection) kept.push_back(t);
    }
    selected = Registry(std::move(kept));
  } else {
    selected = reg;
  }

  RateTable rates;
  switch (ref.mode) {
    case RateMode::FamilyPair:
      if (ref.families.size() != 2) throw Error("materialize: FamilyPair needs exactly 2 families");
      rates = family_pair_rates(selected, parse_family(ref.families[0]),
                                parse_family(ref.families[1]), ref.cap);
      break;
    case RateMode::Uniform:
      rates = uniform_rates(selected);
      break;
    case RateMode::CappedProportional:
      rates = normalize(capped_proportional(selected, ref.cap));
      break;
  }
  return r_combine(rates, ref.r_ratio, ref.unsupervised_source);
}

// ---------------------------------------------------------------------------
// Compute accounting
// ---------------------------------------------------------------------------

/// steps * batch * seq_len; throws if the product exceeds 2^63 - 1.
inline std::uint64_t tokens_seen(std::uint64_t steps, std::uint64_t batch, std::uint64_t seq_len) {
  if (steps == 0 || batch == 0 || seq_len == 0) {
    throw Error("tokens_seen: steps, batch and seq_len must be positive");
  }
  constexpr auto limit = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
  std::uint64_t product = 0;
  if (__builtin_mul_overflow(steps, batch, &product) ||
      __builtin_mul_overflow(product, seq_len, &product) || product > limit) {
    throw Error("tokens_seen: token count overflows a signed 64-bit integer");
  }
  return product;
}

struct ScheduleComparison {
  std::uint64_t vanilla = 0;
  std::uint64_t prefinetune = 0;
  std::uint64_t multitask_pretrain = 0;

  friend bool operator==(const ScheduleComparison&, const ScheduleComparison&) = default;
};

/// Total steps of the three regimes. Multi-task pre-training replaces
/// rather than adds to the self-supervised steps, so it costs the same as
/// vanilla; pre-finetuning inserts an extra stage.
inline ScheduleComparison compare_schedules(std::uint64_t pretrain_steps,
                                            std::uint64_t prefinetune_steps,
                                            std::uint64_t finetune_steps) {
  ScheduleComparison c;
  if (__builtin_add_overflow(pretrain_steps, finetune_steps, &c.vanilla) ||
      __builtin_add_overflow(c.vanilla, prefinetune_steps, &c.prefinetune)) {
    throw Error("compare_schedules: step total overflows");
  }
  c.multitask_pretrain = c.vanilla;
  return c;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const MixtureRef& ref) {
  nlohmann::ordered_json j;
  j["mode"] = std::string(to_string(ref.mode));
  j["families"] = ref.families;
  j["tasks"] = ref.tasks;
  j["collection"] = ref.collection;
  j["cap"] = to_string(ref.cap);
  j["r_ratio"] = tsv::format_double(ref.r_ratio);
  j["unsupervised_source"] = ref.unsupervised_source;
  return j;
}

inline nlohmann::ordered_json to_json(const ExperimentManifest& m) {
  nlohmann::ordered_json j;
  j["id"] = m.id;
  j["mixture"] = to_json(m.mixture);
  j["train_steps"] = m.train_steps;
  j["batch_size"] = m.batch_size;
  j["learning_rate_note"] = m.learning_rate_note;
  j["eval_suite"] = m.eval_suite;
  if (m.pretrain_steps) j["pretrain_steps"] = *m.pretrain_steps;
  if (m.seed) j["seed"] = *m.seed;
  if (m.subset_size) j["subset_size"] = *m.subset_size;
  return j;
}

/// {"schema_version":1,"plan":..,"count":..,"notes":[..],"manifests":[..]}
inline void write_manifests(std::string_view plan_name, std::span<const ExperimentManifest> plan,
                            std::span<const std::string> notes, std::ostream& out) {
  nlohmann::ordered_json j;
  j["schema_version"] = kManifestSchemaVersion;
  j["plan"] = std::string(plan_name);
  j["count"] = plan.size();
  j["notes"] = std::vector<std::string>(notes.begin(), notes.end());
  auto arr = nlohmann::ordered_json::array();
  for (const auto& m : plan) arr.push_back(to_json(m));
  j["manifests"] = std::move(arr);
  out << j.dump(2) << '\n';
}

inline RateMode parse_rate_mode(std::string_view s) {
  for (auto m : {RateMode::CappedProportional, RateMode::FamilyPair, RateMode::Uniform}) {
    if (to_string(m) == s) return m;
  }
  throw Error("unknown rate mode '" + std::string(s) + "'");
}

inline ExperimentManifest manifest_from_json(const nlohmann::json& j) {
  ExperimentManifest m;
  m.id = j.at("id").get<std::string>();
  const auto& mix = j.at("mixture");
  m.mixture.mode = parse_rate_mode(mix.at("mode").get<std::string>());
  m.mixture.families = mix.at("families").get<std::vector<std::string>>();
  m.mixture.tasks = mix.at("tasks").get<std::vector<std::string>>();
  m.mixture.collection = mix.at("collection").get<std::string>();
  m.mixture.cap = parse_cap(mix.at("cap").get<std::string>());
  const auto r = tsv::parse_double(mix.at("r_ratio").get<std::string>());
  if (!r) throw Error("manifest '" + m.id + "': bad r_ratio");
  m.mixture.r_ratio = *r;
  m.mixture.unsupervised_source = mix.at("unsupervised_source").get<std::string>();
  m.train_steps = j.at("train_steps").get<std::uint64_t>();
  m.batch_size = j.at("batch_size").get<std::uint64_t>();
  m.learning_rate_note = j.at("learning_rate_note").get<std::string>();
  m.eval_suite = j.at("eval_suite").get<std::string>();
  if (j.contains("pretrain_steps")) m.pretrain_steps = j["pretrain_steps"].get<std::uint64_t>();
  if (j.contains("seed")) m.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("subset_size")) m.subset_size = j["subset_size"].get<std::size_t>();
  validate(m);
  return m;
}

/// Parses the document written by write_manifests.
inline std::vector<ExperimentManifest> read_manifests(std::istream& in) {
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("schema_version").get<int>() != kManifestSchemaVersion) {
      throw Error("manifests: unsupported schema_version");
    }
    std::vector<ExperimentManifest> plan;
    for (const auto& m : j.at("manifests")) plan.push_back(manifest_from_json(m));
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("manifests: ") + e.what());
  }
}

}  // namespace taskmix
