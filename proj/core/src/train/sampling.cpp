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

#include "milpilot/train/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "milpilot/error.hpp"
#include "milpilot/random.hpp"

namespace milpilot {

namespace {

std::map<int, std::vector<std::size_t>> MembersByClass(std::span<const int> labels) {
  Require(!labels.empty(), ErrorCode::kValidation, "sampler needs at least one label");
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  return members;
}

}  // namespace

double ImbalanceRatio(std::span<const int> labels) {
  const auto members = MembersByClass(labels);
  std::size_t lo = labels.size(), hi = 0;
  for (const auto& [cls, idx] : members) {
    lo = std::min(lo, idx.size());
    hi = std::max(hi, idx.size());
  }
  return static_cast<double>(hi) / static_cast<double>(lo);
}

EpochOrder BuildSampler(std::span<const int> labels, double threshold, std::uint64_t seed) {
  const auto members = MembersByClass(labels);
  SplitMix64 rng(seed);
  EpochOrder order;
  if (ImbalanceRatio(labels) <= threshold) {
    order.indices.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) order.indices[i] = i;
    Shuffle(order.indices, rng);
    return order;
  }
  // Weight 1/n_c per sample: pick a class uniformly, then a member uniformly.
  order.weighted = true;
  std::vector<const std::vector<std::size_t>*> classes;
  for (const auto& [cls, idx] : members) classes.push_back(&idx);
  order.indices.reserve(labels.size());
  for (std::size_t draw = 0; draw < labels.size(); ++draw) {
    const auto& pool = *classes[rng.NextBelow(classes.size())];
    order.indices.push_back(pool[rng.NextBelow(pool.size())]);
  }
  return order;
}

PatchFeatureBag PatchDropout(const PatchFeatureBag& bag, double rate, std::uint64_t seed,
                             bool train) {
  Require(rate >= 0.0 && rate < 1.0, ErrorCode::kValidation, "patch dropout rate must lie in [0, 1)");
  const std::size_t patches = bag.patch_count();
  std::size_t drop = static_cast<std::size_t>(std::floor(rate * static_cast<double>(patches)));
  if (patches > 0) drop = std::min(drop, patches - 1);
  if (!train || drop == 0) return bag;

  SplitMix64 rng(seed);
  std::vector<std::size_t> keep = PartialShuffleIndices(patches, patches - drop, rng);
  std::sort(keep.begin(), keep.end());
  PatchFeatureBag out;
  out.case_id = bag.case_id;
  out.slide_id = bag.slide_id;
  out.feature_dim = bag.feature_dim;
  out.label = bag.label;
  out.features.reserve(keep.size() * bag.feature_dim);
  for (std::size_t p : keep) {
    const auto row = bag.row(p);
    out.features.insert(out.features.end(), row.begin(), row.end());
  }
  return out;
}

}  // namespace milpilot
