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

#include <cstdint>
#include <span>
#include <vector>

#include "milpilot/store/types.hpp"

namespace milpilot {

struct EpochOrder {
  std::vector<std::size_t> indices;
  bool weighted = false;
};

double ImbalanceRatio(std::span<const int> labels);

// Seeded permutation when max/min class count <= threshold; otherwise N draws
// with replacement weighted 1/class_count, so classes are drawn equally often.
EpochOrder BuildSampler(std::span<const int> labels, double threshold, std::uint64_t seed);

// Training-time augmentation: drops floor(rate * P) patches chosen uniformly,
// always keeping at least one. Eval mode and rate 0 return the bag unchanged.
PatchFeatureBag PatchDropout(const PatchFeatureBag& bag, double rate, std::uint64_t seed,
                             bool train);

}  // namespace milpilot
