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

#include "milpilot/store/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "milpilot/error.hpp"
#include "milpilot/random.hpp"

namespace milpilot {

void SyntheticSpec::Validate() const {
  Require(!cases_per_class.empty(), ErrorCode::kValidation, "no classes requested");
  for (std::size_t n : cases_per_class) {
    Require(n >= 1, ErrorCode::kValidation, "every class needs at least one case");
  }
  Require(slides_per_case >= 1, ErrorCode::kValidation, "slides_per_case must be >= 1");
  Require(patches_min >= 1 && patches_min <= patches_max, ErrorCode::kValidation,
          "need 1 <= patches_min <= patches_max");
  Require(signal_fraction > 0.0 && signal_fraction <= 1.0, ErrorCode::kValidation,
          "signal_fraction must lie in (0, 1]");
  Require(std::isfinite(signal_strength) && noise_sigma >= 0.0 && std::isfinite(noise_sigma),
          ErrorCode::kValidation, "signal_strength and noise_sigma must be finite");
  Require(feature_dim >= 1, ErrorCode::kValidation, "feature_dim must be >= 1");
}

SyntheticSpec SyntheticSpec::RealisticProfile() {
  SyntheticSpec spec;
  spec.patches_min = 500;
  spec.patches_max = 50000;
  return spec;
}

std::vector<PatchFeatureBag> GenerateSynthetic(const SyntheticSpec& spec) {
  spec.Validate();
  const std::size_t dim = spec.feature_dim;
  const std::size_t num_classes = spec.cases_per_class.size();

  std::vector<std::vector<double>> directions(num_classes, std::vector<double>(dim));
  for (std::size_t c = 0; c < num_classes; ++c) {
    SplitMix64 rng(DeriveSeed(spec.seed, "synthetic/direction", {c}));
    double norm = 0.0;
    for (double& v : directions[c]) {
      v = rng.NextGaussian();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : directions[c]) v /= norm;
  }

  std::vector<PatchFeatureBag> bags;
  std::size_t case_index = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t i = 0; i < spec.cases_per_class[c]; ++i, ++case_index) {
      char case_id[32];
      std::snprintf(case_id, sizeof(case_id), "case-%05zu", case_index);
      for (std::size_t s = 0; s < spec.slides_per_case; ++s) {
        SplitMix64 rng(DeriveSeed(spec.seed, "synthetic/slide", {case_index, s}));
        const std::size_t span = spec.patches_max - spec.patches_min + 1;
        const std::size_t patches = spec.patches_min + rng.NextBelow(span);

        PatchFeatureBag bag;
        bag.case_id = case_id;
        bag.slide_id = std::string(case_id) + "-s" + std::to_string(s);
        bag.feature_dim = dim;
        bag.label = static_cast<int>(c);
        bag.features.resize(patches * dim);
        for (float& v : bag.features) {
          v = static_cast<float>(spec.noise_sigma * rng.NextGaussian());
        }
        const auto signal_count = static_cast<std::size_t>(
            std::ceil(spec.signal_fraction * static_cast<double>(patches)));
        for (std::size_t p : PartialShuffleIndices(patches, signal_count, rng)) {
          float* row = bag.features.data() + p * dim;
          for (std::size_t d = 0; d < dim; ++d) {
            row[d] += static_cast<float>(spec.signal_strength * directions[c][d]);
          }
        }
        bags.push_back(std::move(bag));
      }
    }
  }
  return bags;
}

CohortSpec CohortForBags(const std::vector<PatchFeatureBag>& bags,
                         std::vector<std::string> class_names) {
  int max_label = -1;
  for (const auto& bag : bags) {
    Require(bag.label.has_value(), ErrorCode::kValidation,
            "bag " + bag.case_id + "/" + bag.slide_id + " has no label");
    max_label = std::max(max_label, *bag.label);
  }
  if (class_names.empty()) {
    for (int c = 0; c <= max_label; ++c) class_names.push_back("class_" + std::to_string(c));
  }
  CohortSpec cohort;
  cohort.class_names = std::move(class_names);
  for (const auto& bag : bags) cohort.members.push_back({bag.case_id, bag.slide_id, *bag.label});
  cohort.Validate();
  return cohort;
}

}  // namespace milpilot
