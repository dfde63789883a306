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
#include <string>
#include <vector>

#include "milpilot/store/types.hpp"

namespace milpilot {

// Planted-signal generator: each class c owns a unit direction u_c; a
// ceil(rho * P) subset of each bag's patches is shifted by a * u_label on top
// of N(0, sigma^2 I) noise.
struct SyntheticSpec {
  std::vector<std::size_t> cases_per_class{100, 100};
  std::size_t slides_per_case = 1;
  std::size_t patches_min = 64;
  std::size_t patches_max = 512;
  double signal_fraction = 0.15;
  double signal_strength = 1.5;
  double noise_sigma = 1.0;
  std::size_t feature_dim = kDefaultFeatureDim;
  std::uint64_t seed = 0;

  void Validate() const;

  // Bag sizes typical of real slides.
  static SyntheticSpec RealisticProfile();
};

std::vector<PatchFeatureBag> GenerateSynthetic(const SyntheticSpec& spec);

// Cohort over generated bags, class names "class_0", "class_1", ... unless given.
CohortSpec CohortForBags(const std::vector<PatchFeatureBag>& bags,
                         std::vector<std::string> class_names = {});

}  // namespace milpilot
