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


// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "taskmix/cli.hpp"
#include "taskmix/taskmix.hpp"

namespace {

using namespace taskmix;

const std::filesystem::path kData = TASKMIX_DATA_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

Registry bundled_registry() {
  return load_registry(kData / "registry.tsv", kData / "registry_sizes.tsv");
}

std::string fmt(double v, int decimals) { return tsv::fixed(v, decimals); }

Outcome transfer_table_analytics() {
  Outcome o;
  const auto m = load_transfer_matrix(kData / "family_transfer.tsv");
  const std::vector<double> printed_avg{29.28, 39.16, 63.77, 77.17, 76.43, 64.31, 12.65, 65.37};
  const std::vector<double> printed_delta{-6.9, 0.1, 4.3, 1.4, -2.5, 4.7, 1.2, -2.4};
  const auto avg = col_avg_excl_diag(m);
  const auto delta = delta_avg(m);
  for (std::size_t j = 0; j < 8; ++j) {
    o.require(std::abs(avg[j] - printed_avg[j]) <= 0.005 + 1e-9,
              "col_avg " + m.families()[j] + " = " + fmt(avg[j], 4) + " vs printed " +
                  fmt(printed_avg[j], 2));
    o.require(std::abs(delta[j] - printed_delta[j]) <= 0.25,
              "delta " + m.families()[j] + " = " + fmt(delta[j], 2) + " vs printed " +
                  fmt(printed_delta[j], 1));
  }
  const auto top = best_effort_families(m, 4);
  const std::set<Family> got(top.begin(), top.end());
  o.require(got == std::set<Family>{Family::CMNS, Family::NLI, Family::CLS, Family::CBQA},
            "top-4 families differ");
  return o;
}

Outcome negative_transfer() {
  Outcome o;
  const auto report = analyze_transfer(load_transfer_matrix(kData / "family_transfer.tsv"));
  o.require(report.neg_counts.data_budget == 22,
            "data budget count " + std::to_string(report.neg_counts.data_budget));
  o.require(report.neg_counts.compute_budget == 40,
            "compute budget count " + std::to_string(report.neg_counts.compute_budget));
  std::ostringstream out;
  write_report_tsv(report, out);
  o.require(out.str().find("negative_transfer_published data_budget=21 compute_budget=38") !=
                std::string::npos,
            "report lacks the quoted 21/38");
  return o;
}

Outcome registry_totals_check() {
  Outcome o;
  const auto reg = bundled_registry();
  const auto totals = registry_totals(reg);
  o.require(totals.task_count == 107, "task count " + std::to_string(totals.task_count));
  o.require(totals.example_total == 18'085'040, "examples " + std::to_string(totals.example_total));
  std::stringstream buf;
  save_registry(reg, buf);
  const auto again = parse_registry(buf, "saved");
  o.require(again == reg, "save/load round trip differs");
  o.require(again.at("samsum").train_size == 14'372, "samsum size");
  o.require(again.at("civil_comments").train_size == 1'804'874, "civil_comments size");
  o.require(again.at("anli").train_size == 162'865, "anli size");
  return o;
}

Outcome rate_policy() {
  Outcome o;
  const auto reg = bundled_registry();
  const auto rt = capped_proportional(reg, Cap(300'000));
  std::set<double> big;
  for (const auto& t : reg) {
    if (t.train_size >= 300'000) big.insert(*rt.weight(t.name));
  }
  o.require(big.size() == 1, "tasks >= 300k do not share one weight");
  const auto reps =
      representative_registry(reg, load_representatives(kData / "representatives.tsv"));
  for (auto other : kStudyFamilies) {
    if (other == Family::NLI) continue;
    const auto pair = family_pair_rates(reps, Family::NLI, other);
    double nli = 0.0;
    double rest = 0.0;
    for (const auto& e : pair.entries) (reps.at(e.task).family == Family::NLI ? nli : rest) += e.weight;
    o.require(std::abs(nli - 0.5) < 1e-12 && std::abs(rest - 0.5) < 1e-12,
              std::string("family masses with ") + std::string(to_string(other)));
    const double ratio = *pair.weight("mnli") / *pair.weight("anli");
    o.require(ratio >= 2.3 && ratio <= 2.5, "MNLI:ANLI = " + fmt(ratio, 3));
  }
  return o;
}

SourceMap stream_sources(const Registry& reg, const MixtureSpec& mix, std::uint64_t seed) {
  SourceMap sources;
  for (const auto& e : mix.supervised.entries) {
    const auto& t = reg.at(e.task);
    sources.emplace(t.name, std::make_shared<SyntheticTaskSource>(
                                t, static_cast<std::size_t>(std::min<std::uint64_t>(t.train_size, 500))));
  }
  if (mix.r_ratio > 0.0) {
    sources.emplace(mix.unsupervised_source,
                    std::make_shared<DenoisingSource>(mix.unsupervised_source,
                                                      synthetic_corpus(500, seed),
                                                      CorruptionConfig{0.15, 3.0, seed}));
  }
  return sources;
}

Outcome r_ratio_realization() {
  Outcome o;
  const auto reg = bundled_registry();
  const auto sup = normalize(capped_proportional(reg, Cap(300'000)));
  for (double r : {1.0, 2.0, 4.0}) {
    const auto mix = r_combine(sup, r, "c4");
    StreamConfig cfg;
    cfg.seed = 2022;
    MixtureStream stream(mix, stream_sources(reg, mix, cfg.seed), cfg);
    const auto report = composition_stats(stream, 100'000);
    const double target = r / (r + 1.0);
    o.require(std::abs(report.unsupervised_fraction() - target) <= 0.01,
              "R=" + fmt(r, 0) + " fraction " + fmt(report.unsupervised_fraction(), 4));
  }
  {
    const auto mix = r_combine(sup, 0.0, "");
    MixtureStream stream(mix, stream_sources(reg, mix, 1), StreamConfig{});
    o.require(composition_stats(stream, 10'000).unsupervised == 0, "R=0 drew unsupervised");
  }
  {
    const auto mix = r_combine(sup, std::numeric_limits<double>::infinity(), "c4");
    MixtureStream stream(mix, stream_sources(reg, mix, 1), StreamConfig{});
    const auto report = composition_stats(stream, 10'000);
    o.require(report.unsupervised == report.total, "R=inf drew supervised");
  }
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Outcome determinism_and_sharding() {
  Outcome o;
  const auto dir = std::filesystem::temp_directory_path() / "taskmix_acceptance";
  std::filesystem::create_directories(dir);
  const std::string cli = TASKMIX_CLI_PATH;
  const auto mixture = dir / "mix.tsv";
  const auto sh = [&](const std::string& cmd) { return std::system(cmd.c_str()); };
  o.require(sh("\"" + cli + "\" mixture compile --r-ratio 2 --out \"" + mixture.string() + "\"") == 0,
            "mixture compile failed");
  for (int run = 0; run < 2; ++run) {
    const auto out = dir / ("run" + std::to_string(run) + ".jsonl");
    o.require(sh("\"" + cli + "\" stream sample --mixture \"" + mixture.string() +
                 "\" --n 2000 --seed 17 --shard 2/4 --out \"" + out.string() + "\"") == 0,
              "stream sample failed");
  }
  const auto a = slurp(dir / "run0.jsonl");
  const auto b = slurp(dir / "run1.jsonl");
  o.require(!a.empty() && a == b, "two process runs differ");

  const auto reg = bundled_registry();
  const auto mix = load_mixture(mixture);
  const auto sources = stream_sources(reg, mix, 17);
  o.require(shard_partition_check(mix, sources, 17, 4, 64), "shards overlap or do not replay");

  StreamConfig cfg;
  cfg.seed = 17;
  MixtureStream full(mix, sources, cfg);
  std::vector<ExampleRecord> expected;
  for (int i = 0; i < 3000; ++i) expected.push_back(full.next());
  MixtureStream head(mix, sources, cfg);
  for (int i = 0; i < 1234; ++i) head.next();
  MixtureStream tail(mix, sources, cfg);
  tail.restore(deserialize_state(serialize_state(head.state())));
  bool same = true;
  for (int i = 1234; i < 3000; ++i) same = same && tail.next() == expected[i];
  o.require(same, "snapshot/restore changed the stream");
  return o;
}

Outcome corruption_properties() {
  Outcome o;
  SplitMix64 rng(7);
  const double densities[] = {0.0, 0.05, 0.15, 0.3};
  std::size_t failures = 0;
  constexpr int kSequences = 12'000;
  for (int trial = 0; trial < kSequences; ++trial) {
    const auto n = static_cast<std::size_t>(2 + uniform_below(rng, 511));
    const CorruptionConfig cfg{densities[trial % 4], 3.0, rng()};
    std::vector<TokenId> tokens(n);
    for (auto& t : tokens) t = static_cast<TokenId>(uniform_below(rng, 32'000));
    try {
      const auto spans = plan_spans(n, cfg, static_cast<std::uint64_t>(trial));
      const auto pair = apply_spans(tokens, spans);
      bool ok = reconstruct(pair) == tokens;
      std::size_t noised = 0;
      for (std::size_t k = 0; k < spans.size(); ++k) {
        noised += spans[k].length;
        if (k) ok = ok && spans[k].start > spans[k - 1].start + spans[k - 1].length;
      }
      ok = ok && noised == static_cast<std::size_t>(std::llround(static_cast<double>(n) * cfg.noise_density));
      std::int64_t last = -1;
      for (auto t : pair.input_tokens) {
        if (!is_sentinel(t)) continue;
        ok = ok && static_cast<std::int64_t>(sentinel_index(t)) == last + 1;
        last = static_cast<std::int64_t>(sentinel_index(t));
      }
      if (!ok) ++failures;
    } catch (const Error&) {
      ++failures;
    }
  }
  o.require(failures == 0, std::to_string(failures) + " of " + std::to_string(kSequences) +
                               " sequences violated a property");
  return o;
}

Outcome combinatorial_plans() {
  Outcome o;
  std::vector<std::string> fams;
  for (auto f : kStudyFamilies) fams.emplace_back(to_string(f));
  const auto pairwise = plan_pairwise(fams, 200'000, 128);
  const auto intra = std::count_if(pairwise.begin(), pairwise.end(), [](const auto& m) {
    return m.mixture.mode != RateMode::FamilyPair;
  });
  o.require(pairwise.size() == 36 && intra == 8, "pairwise count " + std::to_string(pairwise.size()));

  const std::vector<std::size_t> sizes{30, 55, 80};
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const std::vector<std::uint64_t> batches{128, 512};
  const auto scaling = plan_scaling(bundled_registry(), sizes, seeds, 2.0, 524'288, batches);
  o.require(scaling.size() == 18, "scaling count " + std::to_string(scaling.size()));
  for (auto seed : seeds) {
    std::vector<std::set<std::string>> by_size;
    for (auto size : sizes) {
      for (const auto& m : scaling) {
        if (*m.seed == seed && *m.subset_size == size) {
          by_size.emplace_back(m.mixture.tasks.begin(), m.mixture.tasks.end());
          break;
        }
      }
    }
    o.require(by_size.size() == 3, "missing subset");
    for (std::size_t k = 1; k < by_size.size(); ++k) {
      o.require(by_size[k - 1].size() == sizes[k - 1] &&
                    std::includes(by_size[k].begin(), by_size[k].end(), by_size[k - 1].begin(),
                                  by_size[k - 1].end()),
                "subsets not nested for seed " + std::to_string(seed));
    }
  }
  const std::vector<std::uint64_t> ckpts{20'000, 50'000, 100'000, 200'000};
  o.require(plan_sample_efficiency(ckpts, 200'000, 128).size() == 4, "sample-efficiency count");
  return o;
}

Outcome accounting() {
  Outcome o;
  o.require(tokens_seen(1'000'000, 2048, 512) == 1'048'576'000'000ULL, "tokens_seen");
  const auto c = compare_schedules(1'000'000, 200'000, 200'000);
  o.require(c.vanilla == 1'200'000 && c.prefinetune == 1'400'000 &&
                c.multitask_pretrain == 1'200'000,
            "schedule totals");
  return o;
}

Outcome statistical_convergence() {
  Outcome o;
  const auto reg = bundled_registry();
  const auto mix = r_combine(normalize(capped_proportional(reg, Cap(300'000))), 0.0, "");
  StreamConfig cfg;
  cfg.seed = 31337;
  MixtureStream stream(mix, stream_sources(reg, mix, cfg.seed), cfg);
  constexpr std::uint64_t kDraws = 100'000;
  const auto report = composition_stats(stream, kDraws);
  o.require(report.task_counts.size() == 107, "lane count");
  double stat = 0.0;
  for (const auto& [task, count] : report.task_counts) {
    const double expected = static_cast<double>(kDraws) * *mix.supervised.weight(task);
    const double diff = static_cast<double>(count) - expected;
    stat += diff * diff / expected;
  }
  const boost::math::chi_squared dist(static_cast<double>(report.task_counts.size() - 1));
  const double p = boost::math::cdf(boost::math::complement(dist, stat));
  o.require(p > 1e-6, "chi2 = " + fmt(stat, 1) + ", p = " + std::to_string(p));
  if (o.pass) o.detail = "chi2 = " + fmt(stat, 1) + " (df 106), p = " + fmt(p, 4);
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "transfer table analytics reconstruction", 1, transfer_table_analytics},
      {2, "negative-transfer counts 22/40 with quoted 21/38", 1, negative_transfer},
      {3, "registry totals 107 tasks / 18,085,040 examples", 1, registry_totals_check},
      {4, "capped rates and family-pair MNLI:ANLI ratio", 1, rate_policy},
      {5, "R-ratio realization over 100k draws", 30, r_ratio_realization},
      {6, "determinism, sharding, snapshot/restore", 30, determinism_and_sharding},
      {7, "span-corruption properties over 12k sequences", 60, corruption_properties},
      {8, "pairwise/scaling/sample-efficiency plan counts", 1, combinatorial_plans},
      {9, "token and schedule accounting", 1, accounting},
      {10, "chi-square fit of 107-task stream", 60, statistical_convergence},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_seconds) {
      o.pass = false;
      o.detail += (o.detail.empty() ? "" : "; ") + std::string("over time budget");
    }
    if (!o.pass) ++failed;
    std::printf("%s criterion %d: %s (%.3fs)%s%s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs,
                o.detail.empty() ? "" : " - ", o.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed ? 1 : 0;
}
