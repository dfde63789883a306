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
#include <span>
#include <vector>

#include "milpilot/store/types.hpp"

namespace milpilot {

// Padded batch: data is B x Pmax x D row-major; padded rows are zero.
struct Batch {
  std::size_t batch_size = 0;
  std::size_t max_patches = 0;
  std::size_t feature_dim = 0;
  std::vector<float> data;
  std::vector<std::uint8_t> mask;  // B x Pmax
  std::vector<int> labels;         // -1 when the bag is unlabeled
  std::vector<std::size_t> lengths;

  const float* bag_data(std::size_t b) const {
    return data.data() + b * max_patches * feature_dim;
  }
  bool is_real(std::size_t b, std::size_t p) const {
    return mask[b * max_patches + p] != 0;
  }
  // Throws kShape when mask, lengths and data disagree.
  void CheckInvariants() const;
};

Batch Collate(std::span<const PatchFeatureBag> bags);
Batch Collate(std::span<const PatchFeatureBag* const> bags);

}  // namespace milpilot
