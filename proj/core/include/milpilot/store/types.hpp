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
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace milpilot {

inline constexpr std::size_t kDefaultFeatureDim = 1024;
inline constexpr std::size_t kDefaultShardCount = 16;
inline constexpr std::size_t kMinSamplesPerClass = 20;

// One slide: a row-major P x D matrix of patch embeddings.
struct PatchFeatureBag {
  std::string case_id;
  std::string slide_id;
  std::size_t feature_dim = 0;
  std::vector<float> features;
  std::optional<int> label;

  std::size_t patch_count() const {
    return feature_dim == 0 ? 0 : features.size() / feature_dim;
  }
  std::span<const float> row(std::size_t p) const {
    return {features.data() + p * feature_dim, feature_dim};
  }
};

struct SlideRef {
  std::string case_id;
  std::string slide_id;

  friend bool operator==(const SlideRef&, const SlideRef&) = default;
  std::string ToString() const { return case_id + "/" + slide_id; }
};

struct CohortMember {
  std::string case_id;
  std::string slide_id;
  int label = 0;
};

struct CohortSpec {
  std::vector<std::string> class_names;
  std::vector<CohortMember> members;

  std::size_t num_classes() const { return class_names.size(); }
  // Throws kValidation on out-of-range labels or duplicate slides.
  void Validate() const;
};

}  // namespace milpilot
