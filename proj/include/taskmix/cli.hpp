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

// The `taskmix` command line. Each subcommand loads its inputs, calls one
// library operation and writes that operation's documented format.
//
// Exit status: 0 success, 1 usage error, 2 data or validation error.

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "taskmix/taskmix.hpp"

namespace taskmix::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Bad flag combination detected after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ShardSpec {
  std::optional<std::uint64_t> index;  // nullopt means every shard
  std::uint64_t count = 1;
};

/// "i/N" or "all/N".
inline ShardSpec parse_shard(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) throw UsageError("--shard must look like i/N or all/N");
  const auto count = tsv::parse_u64(text.substr(slash + 1));
  if (!count || *count == 0) throw UsageError("--shard: N must be a positive integer");
  ShardSpec spec{std::nullopt, *count};
  const auto head = text.substr(0, slash);
  if (head != "all") {
    const auto index = tsv::parse_u64(head);
    if (!index || *index >= *count) throw UsageError("--shard: i must be in [0, N)");
    spec.index = *index;
  }
  return spec;
}

inline double parse_ratio(const std::string& text) {
  const auto r = tsv::parse_double(text);
  if (!r || *r < 0.0) throw UsageError("--r-ratio must be a non-negative number or inf");
  return *r;
}

inline Cap parse_cap_flag(const std::string& text) {
  try {
    return parse_cap(text);
  } catch (const Error& e) {
    throw UsageError(std::string("--cap: ") + e.what());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Runs `fn` against `path` when given, else against `fallback`.
inline void with_output(const std::string& path, std::ostream& fallback,
                        const std::function<void(std::ostream&)>& fn) {
  if (path.empty()) {
    fn(fallback);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("cannot write '" + path + "'");
  fn(file);
  if (!file) throw Error("write to '" + path + "' failed");
}

struct RegistryFlags {
  std::string registry;
  std::string sizes;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--registry", registry, "Registry TSV (default: bundled)");
    cmd.add_option("--size-overlay", sizes, "Size overlay for `external` rows");
  }

  bool bundled() const { return registry.empty(); }

  Registry load(const std::filesystem::path& data_dir) const {
    if (bundled()) {
      const auto overlay = sizes.empty() ? data_dir / "registry_sizes.tsv"
                                         : std::filesystem::path(sizes);
      return load_registry(data_dir / "registry.tsv", overlay);
    }
    if (sizes.empty()) return load_registry(registry);
    return load_registry(registry, std::filesystem::path(sizes));
  }
};

struct StreamFlags {
  std::string mixture;
  std::uint64_t seed = 0;
  std::string shard = "0/1";
  std::size_t source_size = 1000;
  std::string corpus;
  double density = 0.15;
  double mean_span = 3.0;
  std::size_t max_input_len = 0;
  std::size_t max_target_len = 0;
  RegistryFlags registry;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--mixture", mixture, "Mixture file from `mixture compile`")->required();
    cmd.add_option("--seed", seed, "Stream seed")->required();
    cmd.add_option("--shard", shard, "Shard as i/N, or all/N for every shard")
        ->capture_default_str();
    cmd.add_option("--source-size", source_size, "Synthetic records per task")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd.add_option("--corpus", corpus, "Raw text, one document per line, for the unsupervised lane");
    cmd.add_option("--density", density, "Noise density of the unsupervised lane")
        ->capture_default_str();
    cmd.add_option("--mean-span", mean_span, "Mean noise span length")->capture_default_str();
    cmd.add_option("--max-input-len", max_input_len, "Truncate inputs to this many words");
    cmd.add_option("--max-target-len", max_target_len, "Truncate targets to this many words");
    registry.add_to(cmd);
  }

  StreamConfig config(std::uint64_t shard_index, std::uint64_t shard_count) const {
    StreamConfig cfg;
    cfg.seed = seed;
    cfg.shard_index = shard_index;
    cfg.shard_count = shard_count;
    if (max_input_len) cfg.max_input_len = max_input_len;
    if (max_target_len) cfg.max_target_len = max_target_len;
    return cfg;
  }

  /// Synthetic sources for every mixture task, plus a denoising source for
  /// the unsupervised lane when R > 0.
  SourceMap sources(const MixtureSpec& mix, const std::filesystem::path& data_dir) const {
    const auto reg = registry.load(data_dir);
    SourceMap out;
    for (const auto& e : mix.supervised.entries) {
      const auto& task = reg.at(e.task);
      const auto size = static_cast<std::size_t>(std::min<std::uint64_t>(task.train_size, source_size));
      out.emplace(e.task, std::make_shared<SyntheticTaskSource>(task, size));
    }
    if (mix.r_ratio > 0.0) {
      std::vector<std::string> docs;
      if (corpus.empty()) {
        docs = synthetic_corpus(source_size, seed);
      } else {
        std::istringstream text(read_file(corpus));
        for (std::string line; std::getline(text, line);) {
          if (!tsv::trim(line).empty()) docs.push_back(line);
        }
      }
      CorruptionConfig cfg{density, mean_span, seed};
      out.emplace(mix.unsupervised_source,
                  std::make_shared<DenoisingSource>(mix.unsupervised_source, std::move(docs), cfg));
    }
    return out;
  }
};

/// Parses `args` (without the program name) and runs the chosen subcommand.
inline int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
               std::ostream& err, const std::filesystem::path& default_data_dir) {
  CLI::App app{"Multi-task mixture construction, streaming and transfer analytics", "taskmix"};
  app.require_subcommand(1);
  std::string data_dir_flag;
  app.add_option("--data-dir", data_dir_flag, "Directory holding the bundled data files");

  // registry
  auto* registry_cmd = app.add_subcommand("registry", "Inspect a task registry");
  registry_cmd->require_subcommand(1);
  RegistryFlags reg_validate_flags;
  auto* reg_validate = registry_cmd->add_subcommand("validate", "Parse and check a registry");
  reg_validate_flags.add_to(*reg_validate);
  std::string reg_save;
  reg_validate->add_option("--save", reg_save, "Write the resolved registry here");
  RegistryFlags reg_totals_flags;
  auto* reg_totals = registry_cmd->add_subcommand("totals", "Task count and example total");
  reg_totals_flags.add_to(*reg_totals);

  // mixture
  auto* mixture_cmd = app.add_subcommand("mixture", "Build sampling mixtures");
  mixture_cmd->require_subcommand(1);
  auto* compile = mixture_cmd->add_subcommand("compile", "Compile a registry into a mixture file");
  RegistryFlags compile_reg;
  compile_reg.add_to(*compile);
  std::string cap_text = std::to_string(kDefaultCapLimit);
  std::string r_text = "0";
  std::string unsup_source = std::string(kDefaultUnsupervisedSource);
  std::vector<std::string> families;
  std::vector<std::string> pair;
  std::vector<std::size_t> subset_sizes;
  std::optional<std::uint64_t> compile_seed;
  std::string matrix_path;
  std::size_t top_k = 0;
  std::string representatives;
  std::string weights = "normalized";
  bool uniform = false;
  std::string compile_out;
  std::string compile_out_dir;
  compile->add_option("--cap", cap_text, "Per-task example cap, or inf (--pair: inf unless given)")
      ->capture_default_str();
  compile->add_option("--r-ratio", r_text, "Unsupervised:supervised ratio R (inf allowed)")
      ->capture_default_str();
  compile->add_option("--unsupervised-source", unsup_source, "Id of the raw-text lane")
      ->capture_default_str();
  auto* fam_opt = compile->add_option("--families", families, "Keep these families")->delimiter(',');
  auto* pair_opt =
      compile->add_option("--pair", pair, "Two families, balanced 1:1")->delimiter(',')->expected(2);
  compile->add_option("--representatives", representatives,
                      "Family/task picks used with --pair (default: bundled with the bundled registry)");
  auto* subset_opt = compile->add_option("--subset-sizes", subset_sizes,
                                         "Nested random subsets of these sizes")
                         ->delimiter(',');
  compile->add_option("--seed", compile_seed, "Seed for --subset-sizes");
  auto* matrix_opt =
      compile->add_option("--matrix", matrix_path, "Transfer matrix for best-effort selection");
  compile->add_option("--top-k", top_k, "Families kept by best-effort selection");
  auto* uniform_opt = compile->add_flag("--uniform", uniform, "Equal weight per task");
  compile->add_option("--weights", weights, "normalized rates or raw capped weights")
      ->check(CLI::IsMember({"normalized", "capped"}))
      ->capture_default_str();
  compile->add_option("--out", compile_out, "Output file (default stdout)");
  compile->add_option("--out-dir", compile_out_dir, "Directory for one file per subset size");
  fam_opt->excludes(pair_opt)->excludes(subset_opt)->excludes(matrix_opt);
  pair_opt->excludes(subset_opt)->excludes(matrix_opt)->excludes(uniform_opt);
  subset_opt->excludes(matrix_opt);

  // stream
  auto* stream_cmd = app.add_subcommand("stream", "Sample from a mixture");
  stream_cmd->require_subcommand(1);
  auto* sample = stream_cmd->add_subcommand("sample", "Write n records as JSONL");
  StreamFlags sample_flags;
  sample_flags.add_to(*sample);
  std::uint64_t sample_n = 0;
  std::string sample_out;
  std::string state_in;
  std::string state_out;
  sample->add_option("--n", sample_n, "Records per shard")->required();
  sample->add_option("--out", sample_out, "Output file (default stdout)");
  sample->add_option("--state-in", state_in, "Resume from this snapshot");
  sample->add_option("--state-out", state_out, "Write a snapshot after sampling");
  auto* stats = stream_cmd->add_subcommand("stats", "Tally the composition of n draws");
  StreamFlags stats_flags;
  stats_flags.add_to(*stats);
  std::uint64_t stats_n = 0;
  std::string stats_out;
  stats->add_option("--n", stats_n, "Draws to tally")->required()->check(CLI::PositiveNumber);
  stats->add_option("--out", stats_out, "Output file (default stdout)");

  // corrupt
  auto* corrupt_cmd = app.add_subcommand("corrupt", "Span corruption");
  corrupt_cmd->require_subcommand(1);
  auto* demo = corrupt_cmd->add_subcommand("demo", "Corrupt each input line; JSONL {input, target}");
  double demo_density = 0.15;
  double demo_span = 3.0;
  std::uint64_t demo_seed = 0;
  std::string demo_in;
  std::string demo_out;
  demo->add_option("--density", demo_density, "Noise density")->capture_default_str();
  demo->add_option("--mean-span", demo_span, "Mean span length")->capture_default_str();
  demo->add_option("--seed", demo_seed, "Corruption seed")->required();
  demo->add_option("--in", demo_in, "Input text (default stdin)");
  demo->add_option("--out", demo_out, "Output file (default stdout)");

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "Transfer analytics");
  analyze_cmd->require_subcommand(1);
  auto* transfer = analyze_cmd->add_subcommand(
      "transfer", "Column averages, average gain, negative transfer and ranking");
  std::string transfer_matrix;
  std::string transfer_out;
  transfer->add_option("--matrix", transfer_matrix, "Transfer matrix TSV (default: bundled)");
  transfer->add_option("--out", transfer_out, "Output file (default stdout)");
  auto* correlation =
      analyze_cmd->add_subcommand("correlation", "Pearson correlation of datasets across models");
  std::string scores_path;
  std::vector<std::string> corr_datasets;
  std::string corr_out;
  correlation->add_option("--scores", scores_path, "Score table TSV (model, datasets...)")
      ->required();
  correlation->add_option("--datasets", corr_datasets, "Datasets to correlate")->delimiter(',');
  correlation->add_option("--out", corr_out, "Output file (default stdout)");

  // plan
  auto* plan_cmd = app.add_subcommand("plan", "Emit experiment manifests");
  plan_cmd->require_subcommand(1);
  auto* pairwise = plan_cmd->add_subcommand("pairwise", "Intra-family and family-pair runs");
  std::vector<std::string> plan_families;
  for (auto f : kStudyFamilies) plan_families.emplace_back(to_string(f));
  std::uint64_t pair_steps = 200'000;
  std::uint64_t pair_batch = 128;
  pairwise->add_option("--families", plan_families, "Families")->delimiter(',');
  pairwise->add_option("--steps", pair_steps, "Training steps")->capture_default_str();
  pairwise->add_option("--batch", pair_batch, "Batch size")->capture_default_str();

  auto* scaling = plan_cmd->add_subcommand("scaling", "Task-count scaling runs");
  RegistryFlags scaling_reg;
  scaling_reg.add_to(*scaling);
  std::vector<std::size_t> scaling_sizes{30, 55, 80};
  std::vector<std::uint64_t> scaling_seeds;
  std::string scaling_r = "2";
  std::string scaling_cap = std::to_string(kDefaultCapLimit);
  std::uint64_t scaling_steps = 524'288;
  std::vector<std::uint64_t> scaling_batches{128, 512};
  scaling->add_option("--sizes", scaling_sizes, "Nested subset sizes")->delimiter(',');
  scaling->add_option("--seeds", scaling_seeds, "Subset seeds")->delimiter(',')->required();
  scaling->add_option("--r-ratio", scaling_r, "R")->capture_default_str();
  scaling->add_option("--cap", scaling_cap, "Per-task cap")->capture_default_str();
  scaling->add_option("--steps", scaling_steps, "Pre-training steps")->capture_default_str();
  scaling->add_option("--batches", scaling_batches, "Batch sizes")->delimiter(',');

  auto* efficiency = plan_cmd->add_subcommand("sample-efficiency", "Fine-tune at checkpoints");
  std::vector<std::uint64_t> checkpoints{20'000, 50'000, 100'000, 200'000};
  std::uint64_t eff_steps = 200'000;
  std::uint64_t eff_batch = 128;
  efficiency->add_option("--checkpoints", checkpoints, "Pre-training checkpoints")->delimiter(',');
  efficiency->add_option("--finetune-steps", eff_steps, "Fine-tuning steps")->capture_default_str();
  efficiency->add_option("--batch", eff_batch, "Batch size")->capture_default_str();

  auto* schedules = plan_cmd->add_subcommand("schedules", "Step and token totals per regime");
  std::uint64_t sched_pre = 1'000'000;
  std::uint64_t sched_prefine = 200'000;
  std::uint64_t sched_fine = 200'000;
  std::uint64_t sched_batch = 2048;
  std::uint64_t sched_len = 512;
  schedules->add_option("--pretrain", sched_pre, "Pre-training steps")->capture_default_str();
  schedules->add_option("--prefinetune", sched_prefine, "Pre-finetuning steps")
      ->capture_default_str();
  schedules->add_option("--finetune", sched_fine, "Fine-tuning steps")->capture_default_str();
  schedules->add_option("--batch", sched_batch, "Batch size for token totals")
      ->capture_default_str();
  schedules->add_option("--seq-len", sched_len, "Sequence length for token totals")
      ->capture_default_str();
  std::string plan_out;
  for (auto* p : {pairwise, scaling, efficiency, schedules}) {
    p->add_option("--out", plan_out, "Output file (default stdout)");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const std::filesystem::path data_dir =
      data_dir_flag.empty() ? default_data_dir : std::filesystem::path(data_dir_flag);

  try {
    if (reg_validate->parsed()) {
      const auto reg = reg_validate_flags.load(data_dir);
      if (!reg_save.empty()) with_output(reg_save, out, [&](std::ostream& o) { save_registry(reg, o); });
      out << "ok\t" << reg.size() << " tasks\n";
    } else if (reg_totals->parsed()) {
      const auto totals = registry_totals(reg_totals_flags.load(data_dir));
      out << "tasks\t" << totals.task_count << '\n';
      out << "examples\t" << totals.example_total << '\n';
    } else if (compile->parsed()) {
      const auto reg = compile_reg.load(data_dir);
      const auto cap = parse_cap_flag(cap_text);
      const double r = parse_ratio(r_text);
      const bool raw = weights == "capped";
      if (raw && (r > 0.0 || !pair.empty() || uniform)) {
        throw UsageError("--weights capped only applies to a capped-proportional mixture with R = 0");
      }
      if (!subset_sizes.empty() && !compile_seed) {
        throw UsageError("--subset-sizes needs --seed");
      }
      if (!matrix_path.empty() && top_k == 0) throw UsageError("--matrix needs --top-k");
      if (matrix_path.empty() && top_k != 0) throw UsageError("--top-k needs --matrix");
      if (subset_sizes.size() > 1 && compile_out_dir.empty()) {
        throw UsageError("several --subset-sizes need --out-dir");
      }

      const auto build = [&](const Registry& selected) {
        if (raw) {
          MixtureSpec mix;
          mix.supervised = capped_proportional(selected, cap);
          return mix;
        }
        const auto rates = uniform ? uniform_rates(selected)
                                   : normalize(capped_proportional(selected, cap));
        return r_combine(rates, r, r > 0.0 ? unsup_source : std::string());
      };

      if (!pair.empty()) {
        Registry pool = reg;
        if (!representatives.empty()) {
          pool = representative_registry(reg, load_representatives(representatives));
        } else if (compile_reg.bundled()) {
          pool = representative_registry(reg, load_representatives(data_dir / "representatives.tsv"));
        }
        const auto pair_cap = compile->count("--cap") ? cap : Cap::unlimited();
        const auto rates =
            family_pair_rates(pool, parse_family(pair[0]), parse_family(pair[1]), pair_cap);
        const auto mix = r_combine(rates, r, r > 0.0 ? unsup_source : std::string());
        with_output(compile_out, out, [&](std::ostream& o) { write_mixture(mix, o); });
      } else if (!subset_sizes.empty()) {
        const auto chain = random_subset_chain(reg, subset_sizes, *compile_seed);
        if (chain.size() == 1) {
          with_output(compile_out, out, [&](std::ostream& o) { write_mixture(build(chain[0]), o); });
        } else {
          std::filesystem::create_directories(compile_out_dir);
          for (std::size_t k = 0; k < chain.size(); ++k) {
            const auto path = std::filesystem::path(compile_out_dir) /
                              ("mixture_n" + std::to_string(subset_sizes[k]) + ".tsv");
            with_output(path.string(), out,
                        [&](std::ostream& o) { write_mixture(build(chain[k]), o); });
            out << path.string() << '\n';
          }
        }
      } else if (!matrix_path.empty()) {
        const auto selected = best_effort_selection(load_transfer_matrix(matrix_path), reg, top_k);
        with_output(compile_out, out, [&](std::ostream& o) { write_mixture(build(selected), o); });
      } else {
        const auto selected = families.empty() ? reg : filter_by_family(reg, families);
        with_output(compile_out, out, [&](std::ostream& o) { write_mixture(build(selected), o); });
      }
    } else if (sample->parsed()) {
      const auto shard = parse_shard(sample_flags.shard);
      if (!shard.index && (!state_in.empty() || !state_out.empty())) {
        throw UsageError("--state-in/--state-out need a single shard");
      }
      const auto mix = load_mixture(sample_flags.mixture);
      const auto sources = sample_flags.sources(mix, data_dir);
      with_output(sample_out, out, [&](std::ostream& o) {
        const auto first = shard.index.value_or(0);
        const auto last = shard.index ? first + 1 : shard.count;
        for (auto s = first; s < last; ++s) {
          MixtureStream stream(mix, sources, sample_flags.config(s, shard.count));
          if (!state_in.empty()) stream.restore(deserialize_state(read_file(state_in)));
          for (std::uint64_t k = 0; k < sample_n; ++k) o << to_jsonl(stream.next()) << '\n';
          if (!state_out.empty()) {
            with_output(state_out, out,
                        [&](std::ostream& so) { so << serialize_state(stream.state()); });
          }
        }
      });
    } else if (stats->parsed()) {
      const auto shard = parse_shard(stats_flags.shard);
      if (!shard.index) throw UsageError("stream stats needs a single shard");
      const auto mix = load_mixture(stats_flags.mixture);
      MixtureStream stream(mix, stats_flags.sources(mix, data_dir),
                           stats_flags.config(*shard.index, shard.count));
      const auto report = composition_stats(stream, stats_n);
      with_output(stats_out, out, [&](std::ostream& o) { write_composition_tsv(report, o); });
    } else if (demo->parsed()) {
      const CorruptionConfig cfg{demo_density, demo_span, demo_seed};
      validate(cfg);
      std::unique_ptr<std::istream> file;
      std::istream* src = &in;
      const std::string source = demo_in.empty() ? "<stdin>" : demo_in;
      if (!demo_in.empty()) {
        file = std::make_unique<std::ifstream>(demo_in, std::ios::binary);
        if (!*file) throw Error("cannot open '" + demo_in + "'");
        src = file.get();
      }
      with_output(demo_out, out, [&](std::ostream& o) {
        std::size_t line_no = 0;
        std::uint64_t counter = 0;
        for (std::string line; std::getline(*src, line);) {
          ++line_no;
          if (tsv::trim(line).empty()) continue;
          TextDenoisingPair pair;
          try {
            pair = corrupt_text(line, cfg, counter++);
          } catch (const Error& e) {
            throw ParseError(source, line_no, e.what());
          }
          nlohmann::ordered_json j;
          j["input"] = pair.input;
          j["target"] = pair.target;
          o << j.dump() << '\n';
        }
      });
    } else if (transfer->parsed()) {
      const auto path = transfer_matrix.empty() ? data_dir / "family_transfer.tsv"
                                                : std::filesystem::path(transfer_matrix);
      const auto report = analyze_transfer(load_transfer_matrix(path));
      with_output(transfer_out, out, [&](std::ostream& o) { write_report_tsv(report, o); });
    } else if (correlation->parsed()) {
      std::istringstream text(read_file(scores_path));
      const auto table = parse_score_table(text, scores_path);
      const auto datasets = corr_datasets.empty() ? common_datasets(table) : corr_datasets;
      const auto matrix = within_family_correlation(table, datasets);
      with_output(corr_out, out, [&](std::ostream& o) { write_correlation_tsv(matrix, o); });
    } else if (pairwise->parsed()) {
      const auto plan = plan_pairwise(plan_families, pair_steps, pair_batch);
      std::vector<std::string> notes;
      notes.push_back(std::to_string(plan_families.size()) + " intra-family + " +
                      std::to_string(plan.size() - plan_families.size()) + " pair runs");
      if (plan_families.size() == kStudyFamilies.size()) {
        notes.push_back("F + F(F-1)/2 = " + std::to_string(plan.size()) +
                        " for F = 8; a total of " + std::to_string(kQuotedPairwiseModelCount) +
                        " is sometimes quoted for this design");
      }
      with_output(plan_out, out, [&](std::ostream& o) { write_manifests("pairwise", plan, notes, o); });
    } else if (scaling->parsed()) {
      const auto reg = scaling_reg.load(data_dir);
      const auto plan = plan_scaling(reg, scaling_sizes, scaling_seeds, parse_ratio(scaling_r),
                                     scaling_steps, scaling_batches, parse_cap_flag(scaling_cap));
      const std::vector<std::string> notes{"subsets are nested per seed"};
      with_output(plan_out, out, [&](std::ostream& o) { write_manifests("scaling", plan, notes, o); });
    } else if (efficiency->parsed()) {
      const auto plan = plan_sample_efficiency(checkpoints, eff_steps, eff_batch);
      const std::vector<std::string> notes{
          "pre-training mixture excludes the evaluation collection"};
      with_output(plan_out, out,
                  [&](std::ostream& o) { write_manifests("sample-efficiency", plan, notes, o); });
    } else if (schedules->parsed()) {
      const auto c = compare_schedules(sched_pre, sched_prefine, sched_fine);
      with_output(plan_out, out, [&](std::ostream& o) {
        o << "regime\tsteps\ttokens\n";
        o << "vanilla\t" << c.vanilla << '\t' << tokens_seen(c.vanilla, sched_batch, sched_len)
          << '\n';
        o << "prefinetune\t" << c.prefinetune << '\t'
          << tokens_seen(c.prefinetune, sched_batch, sched_len) << '\n';
        o << "multitask_pretrain\t" << c.multitask_pretrain << '\t'
          << tokens_seen(c.multitask_pretrain, sched_batch, sched_len) << '\n';
      });
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace taskmix::cli
