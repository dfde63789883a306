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

#include "milpilot/store/collate.hpp"

#include <algorithm>
#include <cstring>

#include "milpilot/error.hpp"

namespace milpilot {

void Batch::CheckInvariants() const {
  Require(lengths.size() == batch_size && labels.size() == batch_size &&
              mask.size() == batch_size * max_patches &&
              data.size() == batch_size * max_patches * feature_dim,
          ErrorCode::kShape, "batch buffers disagree with declared shape");
  for (std::size_t b = 0; b < batch_size; ++b) {
    Require(lengths[b] >= 1 && lengths[b] <= max_patches, ErrorCode::kShape,
            "bag length out of range");
    for (std::size_t p = 0; p < max_patches; ++p) {
      Require((mask[b * max_patches + p] != 0) == (p < lengths[b]), ErrorCode::kShape,
              "mask row does not match bag length");
    }
  }
}

Batch Collate(std::span<const PatchFeatureBag* const> bags) {
  Require(!bags.empty(), ErrorCode::kEmptyBatch, "cannot collate an empty list of bags");
  Batch batch;
  batch.batch_size = bags.size();
  batch.feature_dim = bags.front()->feature_dim;
  for (const PatchFeatureBag* bag : bags) {
    Require(bag->feature_dim == batch.feature_dim, ErrorCode::kDimensionMismatch,
            "bags in one batch must share feature_dim");
    Require(bag->patch_count() >= 1, ErrorCode::kShape,
            "bag " + bag->case_id + "/" + bag->slide_id + " has no patches");
    batch.max_patches = std::max(batch.max_patches, bag->patch_count());
  }
  const std::size_t stride = batch.max_patches * batch.feature_dim;
  batch.data.assign(batch.batch_size * stride, 0.0f);
  batch.mask.assign(batch.batch_size * batch.max_patches, 0);
  for (std::size_t b = 0; b < bags.size(); ++b) {
    const PatchFeatureBag& bag = *bags[b];
    std::memcpy(batch.data.data() + b * stride, bag.features.data(),
                bag.features.size() * sizeof(float));
    std::fill_n(batch.mask.begin() + static_cast<std::ptrdiff_t>(b * batch.max_patches),
                bag.patch_count(), std::uint8_t{1});
    batch.lengths.push_back(bag.patch_count());
    batch.labels.push_back(bag.label.value_or(-1));
  }
  return batch;
}

Batch Collate(std::span<const PatchFeatureBag> bags) {
  std::vector<const PatchFeatureBag*> pointers;
  pointers.reserve(bags.size());
  for (const auto& bag : bags) pointers.push_back(&bag);
  return Collate(std::span<const PatchFeatureBag* const>(pointers));
}

}  // namespace milpilot
