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

#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "milpilot/json_io.hpp"
#include "milpilot/store/types.hpp"

namespace milpilot {

// Shard container layout (little-endian):
//   bytes 0..3   magic "FSB1"
//   bytes 4..11  uint64 header length H
//   next H bytes JSON header {"feature_dim": D,
//                             "cases": {case: {slide: {"byte_offset", "row_count"}}}}
//   payload      float32 rows; byte_offset is relative to the payload start.
inline constexpr char kShardMagic[4] = {'F', 'S', 'B', '1'};

struct RoutingEntry {
  std::string shard_file;
  std::vector<std::string> slide_ids;
  std::optional<int> label;
};

struct RoutingIndex {
  std::size_t feature_dim = kDefaultFeatureDim;
  std::size_t shard_count = kDefaultShardCount;
  std::unordered_map<std::string, RoutingEntry> entries;

  const RoutingEntry* Find(const std::string& case_id) const;
  bool Contains(const SlideRef& ref) const;

  Json ToJson() const;
  static RoutingIndex FromJson(const Json& json);
  static RoutingIndex Load(const std::filesystem::path& store_dir);
};

inline constexpr const char* kIndexFileName = "index.json";

std::string ShardFileName(std::size_t shard);

// FNV-1a(case_id) mod shard_count.
std::size_t ShardForCase(const std::string& case_id, std::size_t shard_count);

RoutingIndex WriteStore(const std::vector<PatchFeatureBag>& bags,
                        std::size_t shard_count,
                        const std::filesystem::path& out_dir);

struct SlideExtent {
  std::uint64_t byte_offset = 0;
  std::uint64_t row_count = 0;
};

// Read side of one shard file. The header is parsed on open; rows are read on demand.
class ShardReader {
 public:
  explicit ShardReader(const std::filesystem::path& path);

  std::size_t feature_dim() const { return feature_dim_; }
  bool Has(const std::string& case_id, const std::string& slide_id) const;
  std::vector<float> ReadSlide(const std::string& case_id,
                               const std::string& slide_id);
  const std::map<std::string, std::map<std::string, SlideExtent>>& header() const {
    return header_;
  }

 private:
  std::filesystem::path path_;
  std::ifstream stream_;
  std::size_t feature_dim_ = 0;
  std::uint64_t payload_start_ = 0;
  std::uint64_t payload_size_ = 0;
  std::map<std::string, std::map<std::string, SlideExtent>> header_;
};

// Lazily opens shards on first access and keeps them open; counts opens.
class FeatureStore {
 public:
  FeatureStore(RoutingIndex index, std::filesystem::path store_dir);
  static FeatureStore Open(const std::filesystem::path& store_dir);

  const RoutingIndex& index() const { return index_; }
  std::size_t shards_opened() const { return shards_opened_; }

  PatchFeatureBag ReadSlide(const std::string& case_id, const std::string& slide_id);

 private:
  ShardReader& Shard(const std::string& shard_file);

  RoutingIndex index_;
  std::filesystem::path store_dir_;
  std::unordered_map<std::string, std::unique_ptr<ShardReader>> open_shards_;
  std::size_t shards_opened_ = 0;
};

// Bags in cohort order with labels attached. Throws kMissingFeature naming the
// first member absent from the index.
std::vector<PatchFeatureBag> LoadCohort(FeatureStore& store, const CohortSpec& cohort);

struct ValidationReport {
  std::vector<SlideRef> missing;
  std::map<std::string, std::size_t> per_class_counts;
  std::vector<std::string> below_minimum;
  std::size_t min_per_class = kMinSamplesPerClass;

  bool ok() const { return missing.empty() && below_minimum.empty(); }
  Json ToJson() const;
};

ValidationReport ValidateFeatures(const RoutingIndex& index, const CohortSpec& cohort,
                                  std::size_t min_per_class = kMinSamplesPerClass);

Json CohortToJson(const CohortSpec& cohort);
CohortSpec CohortFromJson(const Json& json);

}  // namespace milpilot
