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

#include "milpilot/eval/splits.hpp"

#include <algorithm>
#include <cmath>

#include "milpilot/error.hpp"
#include "milpilot/random.hpp"

namespace milpilot {

std::string_view SplitPolicyName(SplitPolicy policy) {
  return policy == SplitPolicy::kThreeWay ? "three_way" : "two_way_fallback";
}

namespace {

std::vector<std::vector<std::size_t>> ShuffledByClass(std::span<const int> labels,
                                                      std::uint64_t seed,
                                                      std::string_view purpose) {
  int max_label = -1;
  for (int y : labels) {
    Require(y >= 0, ErrorCode::kValidation, "labels must be non-negative class indices");
    max_label = std::max(max_label, y);
  }
  Require(max_label >= 0, ErrorCode::kValidation, "cannot split an empty label list");
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(max_label) + 1);
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  for (std::size_t c = 0; c < members.size(); ++c) {
    Require(!members[c].empty(), ErrorCode::kValidation,
            "class " + std::to_string(c) + " has no members");
    SplitMix64 rng(DeriveSeed(seed, purpose, {c}));
    Shuffle(members[c], rng);
  }
  return members;
}

std::size_t FloorFraction(double fraction, std::size_t n) {
  // Nudge guards against 0.15 * 100 evaluating to 14.999...
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

}  // namespace

SplitAssignment StratifiedSplit(std::span<const int> labels, std::uint64_t seed,
                                const SplitFractions& fractions) {
  const auto members = ShuffledByClass(labels, seed, "split");
  SplitAssignment out;
  out.policy_applied = SplitPolicy::kThreeWay;
  for (const auto& m : members) {
    if (FloorFraction(fractions.test, m.size()) < fractions.min_test_per_class) {
      out.policy_applied = SplitPolicy::kTwoWayFallback;
    }
  }
  for (const auto& m : members) {
    const std::size_t n = m.size();
    std::size_t n_test = 0, n_val = 0;
    if (out.policy_applied == SplitPolicy::kThreeWay) {
      n_test = FloorFraction(fractions.test, n);
      n_val = FloorFraction(fractions.val, n);
    } else {
      n_val = FloorFraction(fractions.fallback_val, n);
    }
    auto it = m.begin();
    out.test.insert(out.test.end(), it, it + static_cast<std::ptrdiff_t>(n_test));
    it += static_cast<std::ptrdiff_t>(n_test);
    out.val.insert(out.val.end(), it, it + static_cast<std::ptrdiff_t>(n_val));
    it += static_cast<std::ptrdiff_t>(n_val);
    out.train.insert(out.train.end(), it, m.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::vector<Fold> StratifiedKFold(std::span<const int> labels, std::size_t k,
                                  std::uint64_t seed) {
  Require(k >= 2, ErrorCode::kValidation, "k-fold needs k >= 2");
  const auto members = ShuffledByClass(labels, seed, "kfold");
  for (std::size_t c = 0; c < members.size(); ++c) {
    Require(members[c].size() >= k, ErrorCode::kValidation,
            "class " + std::to_string(c) + " has fewer than k=" + std::to_string(k) + " members");
  }
  std::vector<std::size_t> fold_of(labels.size());
  for (const auto& m : members) {
    for (std::size_t i = 0; i < m.size(); ++i) fold_of[m[i]] = i % k;
  }
  std::vector<Fold> folds(k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) (f == fold_of[i] ? folds[f].val : folds[f].train).push_back(i);
  }
  return folds;
}

}  // namespace milpilot
