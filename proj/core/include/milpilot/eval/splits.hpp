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
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace milpilot {

enum class SplitPolicy { kThreeWay, kTwoWayFallback };

std::string_view SplitPolicyName(SplitPolicy policy);

struct SplitFractions {
  double val = 0.15;
  double test = 0.15;
  double fallback_val = 0.20;
  // A held-out test set is produced only when every class yields at least
  // this many test samples.
  std::size_t min_test_per_class = 5;
};

struct SplitAssignment {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  SplitPolicy policy_applied = SplitPolicy::kThreeWay;
};

// Per class: seeded shuffle, then contiguous slices (test, val, rest to train).
// Part sizes are floor(fraction * n_c). Index lists come back sorted.
SplitAssignment StratifiedSplit(std::span<const int> labels, std::uint64_t seed,
                                const SplitFractions& fractions = {});

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

// Per class: seeded shuffle, then round-robin assignment to k folds.
std::vector<Fold> StratifiedKFold(std::span<const int> labels, std::size_t k,
                                  std::uint64_t seed);

}  // namespace milpilot
