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

#include "milpilot/store/feature_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <set>
#include <system_error>

#include "milpilot/error.hpp"
#include "milpilot/hashing.hpp"

namespace milpilot {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "shard payloads are written in host order and must be little-endian");

void CohortSpec::Validate() const {
  Require(!class_names.empty(), ErrorCode::kValidation, "cohort has no classes");
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& m : members) {
    Require(m.label >= 0 && static_cast<std::size_t>(m.label) < class_names.size(),
            ErrorCode::kValidation,
            "class index " + std::to_string(m.label) + " out of range for " +
                m.case_id + "/" + m.slide_id);
    Require(seen.emplace(m.case_id, m.slide_id).second, ErrorCode::kValidation,
            "duplicate cohort member " + m.case_id + "/" + m.slide_id);
  }
}

const RoutingEntry* RoutingIndex::Find(const std::string& case_id) const {
  auto it = entries.find(case_id);
  return it == entries.end() ? nullptr : &it->second;
}

bool RoutingIndex::Contains(const SlideRef& ref) const {
  const RoutingEntry* entry = Find(ref.case_id);
  if (entry == nullptr) return false;
  return std::find(entry->slide_ids.begin(), entry->slide_ids.end(), ref.slide_id) !=
         entry->slide_ids.end();
}

Json RoutingIndex::ToJson() const {
  // Sorted keys keep the file byte-stable.
  std::map<std::string, const RoutingEntry*> sorted;
  for (const auto& [case_id, entry] : entries) sorted.emplace(case_id, &entry);
  Json cases = Json::object();
  for (const auto& [case_id, entry] : sorted) {
    Json e = {{"shard_file", entry->shard_file}, {"slide_ids", entry->slide_ids}};
    if (entry->label) e["label"] = *entry->label;
    cases[case_id] = std::move(e);
  }
  return {{"feature_dim", feature_dim}, {"shard_count", shard_count}, {"entries", cases}};
}

RoutingIndex RoutingIndex::FromJson(const Json& json) {
  RoutingIndex index;
  try {
    index.feature_dim = json.at("feature_dim").get<std::size_t>();
    index.shard_count = json.at("shard_count").get<std::size_t>();
    for (const auto& [case_id, e] : json.at("entries").items()) {
      RoutingEntry entry;
      entry.shard_file = e.at("shard_file").get<std::string>();
      entry.slide_ids = e.at("slide_ids").get<std::vector<std::string>>();
      if (e.contains("label") && !e["label"].is_null()) entry.label = e["label"].get<int>();
      index.entries.emplace(case_id, std::move(entry));
    }
  } catch (const Json::exception& e) {
    Fail(ErrorCode::kIntegrity, std::string("malformed routing index: ") + e.what());
  }
  return index;
}

RoutingIndex RoutingIndex::Load(const fs::path& store_dir) {
  return FromJson(ReadJsonFile(store_dir / kIndexFileName));
}

std::string ShardFileName(std::size_t shard) {
  char name[32];
  std::snprintf(name, sizeof(name), "shard_%02zu.fsb", shard);
  return name;
}

std::size_t ShardForCase(const std::string& case_id, std::size_t shard_count) {
  return Fnv1a32(case_id) % shard_count;
}

namespace {

void CheckBag(const PatchFeatureBag& bag, std::size_t feature_dim) {
  Require(bag.feature_dim == feature_dim, ErrorCode::kDimensionMismatch,
          "bag " + bag.case_id + "/" + bag.slide_id + " has feature_dim " +
              std::to_string(bag.feature_dim) + ", store uses " +
              std::to_string(feature_dim));
  Require(bag.feature_dim > 0 && bag.features.size() % bag.feature_dim == 0 &&
              bag.patch_count() >= 1,
          ErrorCode::kValidation,
          "bag " + bag.case_id + "/" + bag.slide_id + " has no complete patch rows");
  for (float v : bag.features) {
    Require(std::isfinite(v), ErrorCode::kValidation,
            "bag " + bag.case_id + "/" + bag.slide_id + " has non-finite features");
  }
}

}  // namespace

RoutingIndex WriteStore(const std::vector<PatchFeatureBag>& bags, std::size_t shard_count,
                        const fs::path& out_dir) {
  Require(shard_count >= 1, ErrorCode::kValidation, "shard_count must be >= 1");
  RoutingIndex index;
  index.shard_count = shard_count;
  index.feature_dim = bags.empty() ? kDefaultFeatureDim : bags.front().feature_dim;
  for (const auto& bag : bags) CheckBag(bag, index.feature_dim);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) Fail(ErrorCode::kIo, "cannot create store directory " + out_dir.string());

  std::vector<std::vector<const PatchFeatureBag*>> per_shard(shard_count);
  for (const auto& bag : bags) {
    per_shard[ShardForCase(bag.case_id, shard_count)].push_back(&bag);
  }

  for (std::size_t shard = 0; shard < shard_count; ++shard) {
    Json cases = Json::object();
    std::uint64_t offset = 0;
    for (const PatchFeatureBag* bag : per_shard[shard]) {
      Require(!cases.contains(bag->case_id) || !cases[bag->case_id].contains(bag->slide_id),
              ErrorCode::kValidation,
              "duplicate slide " + bag->case_id + "/" + bag->slide_id);
      cases[bag->case_id][bag->slide_id] = {{"byte_offset", offset},
                                            {"row_count", bag->patch_count()}};
      offset += bag->features.size() * sizeof(float);

      RoutingEntry& entry = index.entries[bag->case_id];
      entry.shard_file = ShardFileName(shard);
      entry.slide_ids.push_back(bag->slide_id);
      if (bag->label) entry.label = bag->label;
    }
    const std::string header =
        Json{{"feature_dim", index.feature_dim}, {"cases", cases}}.dump();

    std::string bytes;
    bytes.reserve(12 + header.size() + offset);
    bytes.append(kShardMagic, 4);
    const std::uint64_t header_len = header.size();
    bytes.append(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    bytes.append(header);
    for (const PatchFeatureBag* bag : per_shard[shard]) {
      bytes.append(reinterpret_cast<const char*>(bag->features.data()),
                   bag->features.size() * sizeof(float));
    }
    WriteFileAtomic(out_dir / ShardFileName(shard), bytes);
  }
  WriteJsonFileAtomic(out_dir / kIndexFileName, index.ToJson());
  return index;
}

ShardReader::ShardReader(const fs::path& path)
    : path_(path), stream_(path, std::ios::binary) {
  if (!stream_) Fail(ErrorCode::kIo, "cannot open shard " + path.string());
  char magic[4];
  std::uint64_t header_len = 0;
  stream_.read(magic, 4);
  stream_.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!stream_ || std::memcmp(magic, kShardMagic, 4) != 0) {
    Fail(ErrorCode::kIntegrity, "bad shard magic in " + path.string());
  }
  const auto file_size = fs::file_size(path);
  if (header_len > file_size - 12) {
    Fail(ErrorCode::kIntegrity, "shard header overruns file " + path.string());
  }
  std::string header(header_len, '\0');
  stream_.read(header.data(), static_cast<std::streamsize>(header_len));
  payload_start_ = 12 + header_len;
  payload_size_ = file_size - payload_start_;
  try {
    const Json json = Json::parse(header);
    feature_dim_ = json.at("feature_dim").get<std::size_t>();
    for (const auto& [case_id, slides] : json.at("cases").items()) {
      for (const auto& [slide_id, extent] : slides.items()) {
        SlideExtent e{extent.at("byte_offset").get<std::uint64_t>(),
                      extent.at("row_count").get<std::uint64_t>()};
        if (e.byte_offset + e.row_count * feature_dim_ * sizeof(float) > payload_size_) {
          Fail(ErrorCode::kIntegrity,
               "slide " + case_id + "/" + slide_id + " extends past end of " + path.string());
        }
        header_[case_id][slide_id] = e;
      }
    }
  } catch (const Json::exception& e) {
    Fail(ErrorCode::kIntegrity, "malformed shard header in " + path.string() + ": " + e.what());
  }
}

bool ShardReader::Has(const std::string& case_id, const std::string& slide_id) const {
  auto it = header_.find(case_id);
  return it != header_.end() && it->second.count(slide_id) > 0;
}

std::vector<float> ShardReader::ReadSlide(const std::string& case_id,
                                          const std::string& slide_id) {
  auto it = header_.find(case_id);
  if (it == header_.end() || it->second.count(slide_id) == 0) {
    Fail(ErrorCode::kMissingFeature,
         "slide " + case_id + "/" + slide_id + " not present in " + path_.string());
  }
  const SlideExtent& extent = it->second.at(slide_id);
  std::vector<float> rows(extent.row_count * feature_dim_);
  stream_.clear();
  stream_.seekg(static_cast<std::streamoff>(payload_start_ + extent.byte_offset));
  stream_.read(reinterpret_cast<char*>(rows.data()),
               static_cast<std::streamsize>(rows.size() * sizeof(float)));
  if (!stream_) Fail(ErrorCode::kIo, "short read from " + path_.string());
  return rows;
}

FeatureStore::FeatureStore(RoutingIndex index, fs::path store_dir)
    : index_(std::move(index)), store_dir_(std::move(store_dir)) {}

FeatureStore FeatureStore::Open(const fs::path& store_dir) {
  return FeatureStore(RoutingIndex::Load(store_dir), store_dir);
}

ShardReader& FeatureStore::Shard(const std::string& shard_file) {
  auto it = open_shards_.find(shard_file);
  if (it != open_shards_.end()) return *it->second;
  auto reader = std::make_unique<ShardReader>(store_dir_ / shard_file);
  Require(reader->feature_dim() == index_.feature_dim, ErrorCode::kDimensionMismatch,
          "shard " + shard_file + " feature_dim disagrees with routing index");
  ++shards_opened_;
  return *open_shards_.emplace(shard_file, std::move(reader)).first->second;
}

PatchFeatureBag FeatureStore::ReadSlide(const std::string& case_id,
                                        const std::string& slide_id) {
  if (!index_.Contains({case_id, slide_id})) {
    Fail(ErrorCode::kMissingFeature,
         "no pre-extracted features for slide " + case_id + "/" + slide_id);
  }
  const RoutingEntry& entry = *index_.Find(case_id);
  PatchFeatureBag bag;
  bag.case_id = case_id;
  bag.slide_id = slide_id;
  bag.feature_dim = index_.feature_dim;
  bag.features = Shard(entry.shard_file).ReadSlide(case_id, slide_id);
  bag.label = entry.label;
  return bag;
}

std::vector<PatchFeatureBag> LoadCohort(FeatureStore& store, const CohortSpec& cohort) {
  // Resolve every member first so a missing slide fails before any shard I/O.
  for (const auto& m : cohort.members) {
    if (!store.index().Contains({m.case_id, m.slide_id})) {
      Fail(ErrorCode::kMissingFeature,
           "no pre-extracted features for slide " + m.case_id + "/" + m.slide_id);
    }
  }
  std::vector<PatchFeatureBag> bags;
  bags.reserve(cohort.members.size());
  for (const auto& m : cohort.members) {
    PatchFeatureBag bag = store.ReadSlide(m.case_id, m.slide_id);
    bag.label = m.label;
    bags.push_back(std::move(bag));
  }
  return bags;
}

Json ValidationReport::ToJson() const {
  Json missing_json = Json::array();
  for (const auto& ref : missing) {
    missing_json.push_back({{"case_id", ref.case_id}, {"slide_id", ref.slide_id}});
  }
  return {{"ok", ok()},
          {"missing", missing_json},
          {"per_class_counts", per_class_counts},
          {"below_minimum", below_minimum},
          {"min_per_class", min_per_class}};
}

ValidationReport ValidateFeatures(const RoutingIndex& index, const CohortSpec& cohort,
                                  std::size_t min_per_class) {
  ValidationReport report;
  report.min_per_class = min_per_class;
  for (const auto& name : cohort.class_names) report.per_class_counts[name] = 0;
  for (const auto& m : cohort.members) {
    if (!index.Contains({m.case_id, m.slide_id})) {
      report.missing.push_back({m.case_id, m.slide_id});
      continue;
    }
    if (m.label >= 0 && static_cast<std::size_t>(m.label) < cohort.class_names.size()) {
      ++report.per_class_counts[cohort.class_names[m.label]];
    }
  }
  for (const auto& name : cohort.class_names) {
    if (report.per_class_counts[name] < min_per_class) report.below_minimum.push_back(name);
  }
  return report;
}

Json CohortToJson(const CohortSpec& cohort) {
  Json members = Json::array();
  for (const auto& m : cohort.members) {
    members.push_back({{"case_id", m.case_id}, {"slide_id", m.slide_id}, {"label", m.label}});
  }
  return {{"class_names", cohort.class_names}, {"members", members}};
}

CohortSpec CohortFromJson(const Json& json) {
  CohortSpec cohort;
  try {
    cohort.class_names = json.at("class_names").get<std::vector<std::string>>();
    for (const auto& m : json.at("members")) {
      CohortMember member;
      member.case_id = m.at("case_id").get<std::string>();
      member.slide_id = m.at("slide_id").get<std::string>();
      const Json& label = m.at("label");
      if (label.is_string()) {
        auto it = std::find(cohort.class_names.begin(), cohort.class_names.end(),
                            label.get<std::string>());
        Require(it != cohort.class_names.end(), ErrorCode::kValidation,
                "unknown class name " + label.get<std::string>());
        member.label = static_cast<int>(it - cohort.class_names.begin());
      } else {
        member.label = label.get<int>();
      }
      cohort.members.push_back(std::move(member));
    }
  } catch (const Json::exception& e) {
    Fail(ErrorCode::kValidation, std::string("malformed cohort: ") + e.what());
  }
  cohort.Validate();
  return cohort;
}

}  // namespace milpilot
