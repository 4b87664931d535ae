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


#include "taskmix/plans.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace taskmix {
namespace {

const std::filesystem::path kData = TASKMIX_DATA_DIR;

const Registry& bundled() {
  static const Registry reg =
      load_registry(kData / "registry.tsv", kData / "registry_sizes.tsv");
  return reg;
}

std::vector<std::string> study_families() {
  std::vector<std::string> out;
  for (auto f : kStudyFamilies) out.emplace_back(to_string(f));
  return out;
}

TEST(PlanPairwise, EightFamiliesGiveThirtySix) {
  const auto fams = study_families();
  const auto plan = plan_pairwise(fams, 200000, 128);
  ASSERT_EQ(plan.size(), 36u);
  EXPECT_EQ(pairwise_model_count(8), 36u);
  std::set<std::string> ids;
  int intra = 0;
  for (const auto& m : plan) {
    ids.insert(m.id);
    if (m.mixture.mode == RateMode::FamilyPair) {
      EXPECT_EQ(m.mixture.families.size(), 2u);
    } else {
      EXPECT_EQ(m.mixture.families.size(), 1u);
      ++intra;
    }
    EXPECT_EQ(m.train_steps, 200000u);
    EXPECT_EQ(m.batch_size, 128u);
  }
  EXPECT_EQ(intra, 8);
  EXPECT_EQ(ids.size(), 36u);
  EXPECT_EQ(plan[8].id, "pair-SUM-DLG");
}

TEST(PlanPairwise, CountFormula) {
  for (std::size_t f = 1; f <= 8; ++f) {
    const auto fams = study_families();
    const std::vector<std::string> sub(fams.begin(), fams.begin() + static_cast<long>(f));
    EXPECT_EQ(plan_pairwise(sub, 1, 1).size(), f + f * (f - 1) / 2);
  }
  EXPECT_THROW(plan_pairwise(std::vector<std::string>{}, 1, 1), Error);
  EXPECT_THROW(plan_pairwise(std::vector<std::string>{"NOPE"}, 1, 1), Error);
  EXPECT_THROW(plan_pairwise(std::vector<std::string>{"NLI"}, 0, 1), Error);
}

TEST(PlanScaling, EighteenNestedManifests) {
  const std::vector<std::size_t> sizes{30, 55, 80};
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const std::vector<std::uint64_t> batches{128, 512};
  const auto plan = plan_scaling(bundled(), sizes, seeds, 2.0, 524288, batches);
  ASSERT_EQ(plan.size(), 18u);
  for (std::size_t s = 0; s < 3; ++s) {
    const auto& n30 = plan[s * 6 + 0].mixture.tasks;
    const auto& n55 = plan[s * 6 + 2].mixture.tasks;
    const auto& n80 = plan[s * 6 + 4].mixture.tasks;
    EXPECT_EQ(n30.size(), 30u);
    EXPECT_EQ(n55.size(), 55u);
    EXPECT_EQ(n80.size(), 80u);
    const std::set<std::string> s55(n55.begin(), n55.end());
    const std::set<std::string> s80(n80.begin(), n80.end());
    for (const auto& t : n30) EXPECT_TRUE(s55.contains(t));
    for (const auto& t : n55) EXPECT_TRUE(s80.contains(t));
    EXPECT_EQ(plan[s * 6 + 0].mixture.tasks, plan[s * 6 + 1].mixture.tasks);
    EXPECT_EQ(plan[s * 6].mixture.r_ratio, 2.0);
    EXPECT_EQ(plan[s * 6].mixture.unsupervised_source, "c4");
  }
  EXPECT_EQ(plan[0].id, "scaling-n30-seed1-b128");
}

TEST(PlanSampleEfficiency, OnePerCheckpoint) {
  const std::vector<std::uint64_t> ckpts{20000, 50000, 100000, 200000};
  const auto plan = plan_sample_efficiency(ckpts, 200000, 128);
  ASSERT_EQ(plan.size(), 4u);
  EXPECT_EQ(*plan[2].pretrain_steps, 100000u);
  EXPECT_THROW(plan_sample_efficiency(std::vector<std::uint64_t>{5, 5}, 1, 1), Error);
  EXPECT_THROW(plan_sample_efficiency(std::vector<std::uint64_t>{5, 3}, 1, 1), Error);
}

TEST(Accounting, TokensSeen) {
  EXPECT_EQ(tokens_seen(1'000'000, 2048, 512), 1'048'576'000'000u);
  EXPECT_EQ(tokens_seen(200'000, 128, 512), 13'107'200'000u);
  EXPECT_THROW(tokens_seen(0, 1, 1), Error);
  EXPECT_THROW(tokens_seen(1ULL << 40, 1ULL << 20, 1ULL << 10), Error);
  EXPECT_THROW(tokens_seen(1ULL << 62, 2, 1), Error);
  EXPECT_EQ(tokens_seen((1ULL << 62) - 1, 2, 1), (1ULL << 63) - 2);
}

TEST(Accounting, CompareSchedules) {
  const auto c = compare_schedules(1'000'000, 200'000, 200'000);
  EXPECT_EQ(c.vanilla, 1'200'000u);
  EXPECT_EQ(c.prefinetune, 1'400'000u);
  EXPECT_EQ(c.multitask_pretrain, 1'200'000u);
  EXPECT_THROW(compare_schedules(std::numeric_limits<std::uint64_t>::max(), 0, 1), Error);
}

TEST(Manifests, JsonRoundTrip) {
  const std::vector<std::size_t> sizes{30};
  const std::vector<std::uint64_t> seeds{4};
  const std::vector<std::uint64_t> batches{128};
  auto plan = plan_scaling(bundled(), sizes, seeds, 2.0, 1000, batches);
  const auto ckpts = plan_sample_efficiency(std::vector<std::uint64_t>{10}, 5, 8);
  plan.insert(plan.end(), ckpts.begin(), ckpts.end());
  std::stringstream buf;
  write_manifests("mixed", plan, std::vector<std::string>{"note"}, buf);
  const auto again = read_manifests(buf);
  ASSERT_EQ(again.size(), plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) {
    EXPECT_EQ(again[i].id, plan[i].id);
    EXPECT_EQ(again[i].mixture.tasks, plan[i].mixture.tasks);
    EXPECT_EQ(again[i].mixture.cap, plan[i].mixture.cap);
    EXPECT_EQ(again[i].pretrain_steps, plan[i].pretrain_steps);
    EXPECT_EQ(again[i].seed, plan[i].seed);
  }
  std::istringstream bad("{\"schema_version\":2,\"manifests\":[]}");
  EXPECT_THROW(read_manifests(bad), Error);
}

TEST(Materialize, BuildsTheReferencedMixture) {
  const auto reps =
      representative_registry(bundled(), load_representatives(kData / "representatives.tsv"));
  const auto plan = plan_pairwise(study_families(), 1, 1);
  for (const auto& m : plan) {
    const auto mix = materialize(m.mixture, reps);
    EXPECT_NEAR(mix.supervised.total(), 1.0, 1e-12) << m.id;
    EXPECT_EQ(mix.supervised.size(), 3 * m.mixture.families.size()) << m.id;
  }
  const auto scaled = plan_scaling(bundled(), std::vector<std::size_t>{30},
                                   std::vector<std::uint64_t>{1}, 2.0, 1,
                                   std::vector<std::uint64_t>{1});
  const auto mix = materialize(scaled[0].mixture, bundled());
  EXPECT_EQ(mix.supervised.size(), 30u);
  EXPECT_NEAR(mix.unsupervised_fraction(), 2.0 / 3.0, 1e-15);
  const auto glue = plan_sample_efficiency(std::vector<std::uint64_t>{1}, 1, 1);
  EXPECT_EQ(materialize(glue[0].mixture, bundled()).supervised.size(), 7u);
}

}  // namespace
}  // namespace taskmix
