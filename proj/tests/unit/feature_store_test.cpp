// Copyright 2026 The milpilot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "milpilot/error.hpp"
#include "milpilot/hashing.hpp"
#include "milpilot/json_io.hpp"
#include "milpilot/store/collate.hpp"
#include "milpilot/store/feature_store.hpp"
#include "milpilot/store/synthetic.hpp"
#include "test_support.hpp"

namespace milpilot {
namespace {

using testing::RandomBag;
using testing::TempDir;

std::vector<PatchFeatureBag> SmallBags(std::size_t cases, std::size_t slides_per_case,
                                       std::size_t dim = 4) {
  std::vector<PatchFeatureBag> bags;
  for (std::size_t c = 0; c < cases; ++c) {
    for (std::size_t s = 0; s < slides_per_case; ++s) {
      PatchFeatureBag bag = RandomBag(2 + (c + s) % 5, dim, c * 31 + s, static_cast<int>(c % 2));
      bag.case_id = "case-" + std::to_string(c);
      bag.slide_id = bag.case_id + "-s" + std::to_string(s);
      bags.push_back(std::move(bag));
    }
  }
  return bags;
}

CohortSpec CohortOf(const std::vector<PatchFeatureBag>& bags) { return CohortForBags(bags); }

TEST(FeatureStore, ShardAssignmentIsFnvModulo) {
  for (const std::string id : {"a", "case-00001", "TCGA-XX-1234"}) {
    EXPECT_EQ(ShardForCase(id, 16), Fnv1a32(id) % 16);
  }
  // FNV-1a 32-bit reference value for "a".
  EXPECT_EQ(Fnv1a32("a"), 0xe40c292cu);
  EXPECT_EQ(ShardFileName(3), "shard_03.fsb");
}

TEST(FeatureStore, TwoCasesTwoShards) {
  TempDir dir;
  const auto bags = SmallBags(2, 1);
  const RoutingIndex index = WriteStore(bags, 2, dir.path());
  EXPECT_EQ(index.entries.size(), 2u);
  for (const auto& bag : bags) {
    const RoutingEntry* entry = index.Find(bag.case_id);
    ASSERT_NE(entry, nullptr);
    EXPECT_EQ(entry->shard_file, ShardFileName(ShardForCase(bag.case_id, 2)));
    EXPECT_TRUE(std::filesystem::exists(dir.path() / entry->shard_file));
  }
  EXPECT_TRUE(std::filesystem::exists(dir.path() / kIndexFileName));
}

TEST(FeatureStore, RoundTripIsBitExact) {
  TempDir dir;
  const auto bags = SmallBags(3, 2);
  WriteStore(bags, 4, dir.path());
  FeatureStore store = FeatureStore::Open(dir.path());
  const auto loaded = LoadCohort(store, CohortOf(bags));
  ASSERT_EQ(loaded.size(), bags.size());
  for (std::size_t i = 0; i < bags.size(); ++i) {
    EXPECT_EQ(loaded[i].case_id, bags[i].case_id);
    EXPECT_EQ(loaded[i].slide_id, bags[i].slide_id);
    EXPECT_EQ(loaded[i].feature_dim, bags[i].feature_dim);
    EXPECT_EQ(std::memcmp(loaded[i].features.data(), bags[i].features.data(),
                          bags[i].features.size() * sizeof(float)),
              0);
    EXPECT_EQ(loaded[i].label, bags[i].label);
  }
}

TEST(FeatureStore, DefaultShardCountWritesSixteenFiles) {
  TempDir dir;
  WriteStore(SmallBags(40, 1), kDefaultShardCount, dir.path());
  std::size_t shards = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir.path())) {
    shards += entry.path().extension() == ".fsb" ? 1 : 0;
  }
  EXPECT_EQ(shards, 16u);
}

TEST(FeatureStore, CaseSlidesShareOneShard) {
  TempDir dir;
  const auto bags = SmallBags(6, 3);
  const RoutingIndex index = WriteStore(bags, 4, dir.path());
  for (const auto& [case_id, entry] : index.entries) {
    EXPECT_EQ(entry.slide_ids.size(), 3u);
    ShardReader reader(dir.path() / entry.shard_file);
    for (const auto& slide : entry.slide_ids) EXPECT_TRUE(reader.Has(case_id, slide));
  }
}

TEST(FeatureStore, MixedFeatureDimsRejected) {
  TempDir dir;
  auto bags = SmallBags(2, 1);
  bags[1] = RandomBag(3, 5, 1, 0, "other");
  try {
    WriteStore(bags, 2, dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(FeatureStore, UnwritablePathIsIoError) {
  TempDir dir;
  const auto blocker = dir.path() / "file";
  std::ofstream(blocker) << "x";
  try {
    WriteStore(SmallBags(2, 1), 2, blocker / "sub");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(FeatureStore, NonFiniteFeaturesRejected) {
  TempDir dir;
  auto bags = SmallBags(2, 1);
  bags[0].features[1] = std::nanf("");
  EXPECT_THROW(WriteStore(bags, 2, dir.path()), Error);
}

TEST(FeatureStore, LazyOpenTouchesOnlyNeededShards) {
  TempDir dir;
  const auto bags = SmallBags(60, 1);
  const RoutingIndex index = WriteStore(bags, 16, dir.path());

  FeatureStore store = FeatureStore::Open(dir.path());
  EXPECT_EQ(store.shards_opened(), 0u);
  // Cohort restricted to a single shard.
  const std::string target = index.entries.at(bags[0].case_id).shard_file;
  std::vector<PatchFeatureBag> same_shard;
  for (const auto& bag : bags) {
    if (index.entries.at(bag.case_id).shard_file == target) same_shard.push_back(bag);
  }
  EXPECT_EQ(LoadCohort(store, CohortOf(same_shard)).size(), same_shard.size());
  EXPECT_EQ(store.shards_opened(), 1u);

  FeatureStore fresh = FeatureStore::Open(dir.path());
  EXPECT_TRUE(LoadCohort(fresh, CohortSpec{{"class_0", "class_1"}, {}}).empty());
  EXPECT_EQ(fresh.shards_opened(), 0u);
}

TEST(FeatureStore, TenSlidesOverThreeShards) {
  TempDir dir;
  const auto all = SmallBags(60, 1);
  const RoutingIndex index = WriteStore(all, 16, dir.path());
  std::map<std::string, std::vector<PatchFeatureBag>> by_shard;
  for (const auto& bag : all) by_shard[index.entries.at(bag.case_id).shard_file].push_back(bag);
  std::vector<PatchFeatureBag> chosen;
  std::size_t shards = 0;
  const std::size_t take[] = {4, 3, 3};
  for (auto& [shard, bags] : by_shard) {
    if (shards == 3 || bags.size() < take[shards]) continue;
    chosen.insert(chosen.end(), bags.begin(), bags.begin() + take[shards]);
    ++shards;
  }
  ASSERT_EQ(shards, 3u);
  ASSERT_EQ(chosen.size(), 10u);
  FeatureStore store = FeatureStore::Open(dir.path());
  EXPECT_EQ(LoadCohort(store, CohortOf(chosen)).size(), 10u);
  EXPECT_EQ(store.shards_opened(), 3u);
}

TEST(FeatureStore, MissingMemberNamesSlide) {
  TempDir dir;
  const auto bags = SmallBags(3, 1);
  WriteStore(bags, 2, dir.path());
  CohortSpec cohort = CohortOf(bags);
  cohort.members.push_back({"case-404", "case-404-s0", 0});
  FeatureStore store = FeatureStore::Open(dir.path());
  try {
    LoadCohort(store, cohort);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingFeature);
    EXPECT_NE(std::string(e.what()).find("case-404/case-404-s0"), std::string::npos);
  }
  EXPECT_EQ(store.shards_opened(), 0u);
}

TEST(FeatureStore, ValidateFeaturesReportsMissingAndCounts) {
  TempDir dir;
  const auto bags = SmallBags(5, 1);
  std::vector<PatchFeatureBag> stored(bags.begin(), bags.begin() + 4);
  const RoutingIndex index = WriteStore(stored, 2, dir.path());
  const ValidationReport report = ValidateFeatures(index, CohortOf(bags), 1);
  ASSERT_EQ(report.missing.size(), 1u);
  EXPECT_EQ(report.missing[0], (SlideRef{bags[4].case_id, bags[4].slide_id}));
  EXPECT_EQ(report.per_class_counts.at("class_0"), 2u);
  EXPECT_EQ(report.per_class_counts.at("class_1"), 2u);
  EXPECT_FALSE(report.ok());

  const ValidationReport clean = ValidateFeatures(index, CohortOf(stored), 1);
  EXPECT_TRUE(clean.missing.empty());
  EXPECT_TRUE(clean.ok());
}

TEST(FeatureStore, ClassBelowTwentyIsFlagged) {
  TempDir dir;
  auto bags = SmallBags(39, 1);
  const RoutingIndex index = WriteStore(bags, 4, dir.path());
  const ValidationReport report = ValidateFeatures(index, CohortOf(bags));
  EXPECT_EQ(report.per_class_counts.at("class_0"), 20u);
  EXPECT_EQ(report.per_class_counts.at("class_1"), 19u);
  EXPECT_EQ(report.below_minimum, std::vector<std::string>{"class_1"});
  EXPECT_FALSE(report.ok());
}

TEST(FeatureStore, IndexJsonRoundTrip) {
  TempDir dir;
  const RoutingIndex index = WriteStore(SmallBags(5, 2), 3, dir.path());
  const RoutingIndex loaded = RoutingIndex::Load(dir.path());
  EXPECT_EQ(loaded.ToJson(), index.ToJson());
  EXPECT_EQ(loaded.shard_count, 3u);
  EXPECT_EQ(loaded.feature_dim, 4u);
}

TEST(FeatureStore, CorruptShardIsDetected) {
  TempDir dir;
  const auto bags = SmallBags(2, 1);
  const RoutingIndex index = WriteStore(bags, 1, dir.path());
  const auto shard = dir.path() / ShardFileName(0);
  std::filesystem::resize_file(shard, std::filesystem::file_size(shard) - 8);
  EXPECT_THROW(ShardReader{shard}, Error);
  std::ofstream(shard, std::ios::binary | std::ios::trunc) << "NOPE";
  EXPECT_THROW(ShardReader{shard}, Error);
}

TEST(FeatureStore, CohortJsonAcceptsNamesOrIndices) {
  const Json json = {{"class_names", {"benign", "malignant"}},
                     {"members",
                      {{{"case_id", "a"}, {"slide_id", "a-s0"}, {"label", 1}},
                       {{"case_id", "b"}, {"slide_id", "b-s0"}, {"label", "benign"}}}}};
  const CohortSpec cohort = CohortFromJson(json);
  EXPECT_EQ(cohort.members[0].label, 1);
  EXPECT_EQ(cohort.members[1].label, 0);
  EXPECT_EQ(CohortFromJson(CohortToJson(cohort)).members.size(), 2u);
}

TEST(FeatureStore, CohortValidationRejectsDuplicatesAndBadLabels) {
  CohortSpec cohort{{"a", "b"}, {{"c", "s", 0}, {"c", "s", 1}}};
  EXPECT_THROW(cohort.Validate(), Error);
  cohort.members = {{"c", "s", 2}};
  EXPECT_THROW(cohort.Validate(), Error);
}

// ---- collation ----

TEST(Collate, PadsToLongestAndMasks) {
  std::vector<PatchFeatureBag> bags{RandomBag(3, 2, 1, 0), RandomBag(5, 2, 2, 1)};
  const Batch batch = Collate(bags);
  EXPECT_EQ(batch.max_patches, 5u);
  EXPECT_EQ(batch.lengths, (std::vector<std::size_t>{3, 5}));
  std::size_t row0 = 0;
  for (std::size_t p = 0; p < 5; ++p) row0 += batch.is_real(0, p) ? 1 : 0;
  EXPECT_EQ(row0, 3u);
  EXPECT_EQ(batch.labels, (std::vector<int>{0, 1}));
  batch.CheckInvariants();
}

TEST(Collate, SingleBagIsIdentity) {
  std::vector<PatchFeatureBag> bags{RandomBag(4, 3, 9)};
  const Batch batch = Collate(bags);
  EXPECT_EQ(batch.data, bags[0].features);
  for (std::size_t p = 0; p < 4; ++p) EXPECT_TRUE(batch.is_real(0, p));
}

TEST(Collate, RealisticExtremesHaveZeroPadding) {
  std::vector<PatchFeatureBag> bags{RandomBag(500, 2, 1), RandomBag(50000, 2, 2)};
  const Batch batch = Collate(bags);
  EXPECT_EQ(batch.max_patches, 50000u);
  double padded = 0.0;
  for (std::size_t p = 500; p < 50000; ++p) {
    EXPECT_FALSE(batch.is_real(0, p));
    for (std::size_t d = 0; d < 2; ++d) padded += std::abs(batch.bag_data(0)[p * 2 + d]);
  }
  EXPECT_EQ(padded, 0.0);
}

TEST(Collate, RecoversEveryBag) {
  std::vector<PatchFeatureBag> bags;
  for (std::size_t i = 0; i < 7; ++i) bags.push_back(RandomBag(1 + (i * 5) % 9, 3, i));
  const Batch batch = Collate(bags);
  for (std::size_t b = 0; b < bags.size(); ++b) {
    const std::vector<float> recovered(batch.bag_data(b),
                                       batch.bag_data(b) + batch.lengths[b] * batch.feature_dim);
    EXPECT_EQ(recovered, bags[b].features);
  }
}

TEST(Collate, UnlabeledBagsGetMinusOne) {
  std::vector<PatchFeatureBag> bags{RandomBag(2, 2, 1)};
  bags[0].label.reset();
  EXPECT_EQ(Collate(bags).labels, std::vector<int>{-1});
}

TEST(Collate, ErrorsOnEmptyAndMixedInput) {
  try {
    Collate(std::span<const PatchFeatureBag>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyBatch);
  }
  std::vector<PatchFeatureBag> mixed{RandomBag(2, 2, 1), RandomBag(2, 3, 1)};
  EXPECT_THROW(Collate(mixed), Error);
}

// ---- synthetic ----

TEST(Synthetic, DeterministicPerSeed) {
  SyntheticSpec spec;
  spec.cases_per_class = {3, 3};
  spec.feature_dim = 16;
  const auto a = GenerateSynthetic(spec);
  const auto b = GenerateSynthetic(spec);
  ASSERT_EQ(a.size(), 6u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].features, b[i].features);
  spec.seed = 1;
  EXPECT_NE(GenerateSynthetic(spec)[0].features, a[0].features);
}

TEST(Synthetic, BagSizesAndLabelsFollowSpec) {
  SyntheticSpec spec;
  spec.cases_per_class = {4, 2, 3};
  spec.slides_per_case = 2;
  spec.patches_min = 5;
  spec.patches_max = 9;
  spec.feature_dim = 4;
  const auto bags = GenerateSynthetic(spec);
  ASSERT_EQ(bags.size(), 18u);
  std::map<int, std::size_t> counts;
  std::set<std::string> ids;
  for (const auto& bag : bags) {
    EXPECT_GE(bag.patch_count(), 5u);
    EXPECT_LE(bag.patch_count(), 9u);
    ++counts[*bag.label];
    ids.insert(bag.case_id + "/" + bag.slide_id);
  }
  EXPECT_EQ(counts[0], 8u);
  EXPECT_EQ(counts[2], 6u);
  EXPECT_EQ(ids.size(), 18u);
}

TEST(Synthetic, SignalShiftsMeanAlongClassDirection) {
  // Pure signal (sigma 0, rho 1): every patch equals a * u_label.
  SyntheticSpec spec;
  spec.cases_per_class = {2, 2};
  spec.feature_dim = 32;
  spec.noise_sigma = 0.0;
  spec.signal_fraction = 1.0;
  spec.signal_strength = 2.0;
  const auto bags = GenerateSynthetic(spec);
  for (const auto& bag : bags) {
    double norm = 0.0;
    for (float v : bag.row(0)) norm += static_cast<double>(v) * v;
    EXPECT_NEAR(std::sqrt(norm), 2.0, 1e-5);
    EXPECT_EQ(std::vector<float>(bag.row(0).begin(), bag.row(0).end()),
              std::vector<float>(bag.row(bag.patch_count() - 1).begin(),
                                 bag.row(bag.patch_count() - 1).end()));
  }
  EXPECT_EQ(bags[0].features[0], bags[1].features[0]);
  EXPECT_NE(bags[0].features[0], bags[2].features[0]);
}

TEST(Synthetic, SignalCountIsCeilOfFraction) {
  SyntheticSpec spec;
  spec.cases_per_class = {1, 1};
  spec.feature_dim = 8;
  spec.noise_sigma = 0.0;
  spec.signal_fraction = 0.15;
  const auto bags = GenerateSynthetic(spec);
  for (const auto& bag : bags) {
    std::size_t nonzero = 0;
    for (std::size_t p = 0; p < bag.patch_count(); ++p) {
      bool any = false;
      for (float v : bag.row(p)) any = any || v != 0.0f;
      nonzero += any ? 1 : 0;
    }
    EXPECT_EQ(nonzero,
              static_cast<std::size_t>(std::ceil(0.15 * static_cast<double>(bag.patch_count()))));
  }
}

TEST(Synthetic, InvalidSpecRejected) {
  SyntheticSpec spec;
  spec.signal_fraction = 0.0;
  EXPECT_THROW(spec.Validate(), Error);
  spec = SyntheticSpec{};
  spec.patches_min = 0;
  EXPECT_THROW(spec.Validate(), Error);
  spec = SyntheticSpec{};
  spec.cases_per_class = {3, 0};
  EXPECT_THROW(spec.Validate(), Error);
  spec = SyntheticSpec{};
  spec.patches_min = 10;
  spec.patches_max = 5;
  EXPECT_THROW(GenerateSynthetic(spec), Error);
}

TEST(Synthetic, RealisticProfileUsesSlideScaleBags) {
  const SyntheticSpec spec = SyntheticSpec::RealisticProfile();
  EXPECT_EQ(spec.patches_min, 500u);
  EXPECT_EQ(spec.patches_max, 50000u);
}

}  // namespace
}  // namespace milpilot
