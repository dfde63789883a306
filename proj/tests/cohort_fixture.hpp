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

#include <map>
#include <vector>

#include "milpilot/model/config.hpp"
#include "milpilot/store/synthetic.hpp"
#include "milpilot/train/config.hpp"
#include "milpilot/train/trainer.hpp"

namespace milpilot::testing {

struct TinyCohort {
  std::vector<PatchFeatureBag> bags;
  DataSplits splits;
};

// Two classes of small 8-dim bags, split in per-class order into train/val/test.
inline TinyCohort MakeCohort(double strength, std::size_t per_class = 16) {
  SyntheticSpec spec;
  spec.cases_per_class = {per_class, per_class};
  spec.patches_min = 6;
  spec.patches_max = 14;
  spec.feature_dim = 8;
  spec.signal_strength = strength;
  spec.signal_fraction = 0.3;
  spec.seed = 3;
  TinyCohort cohort;
  cohort.bags = GenerateSynthetic(spec);
  std::map<int, std::size_t> seen;
  for (const auto& bag : cohort.bags) {
    const std::size_t k = seen[*bag.label]++;
    const std::size_t held_out = per_class * 3 / 16;
    auto& target = k < per_class - 2 * held_out
                       ? cohort.splits.train
                       : (k < per_class - held_out ? cohort.splits.val : cohort.splits.test);
    target.push_back(&bag);
  }
  return cohort;
}

inline ModelConfig CohortModel(Strategy strategy = Strategy::kAbmil) {
  ModelConfig config = ModelConfig::Default(strategy, {"class_0", "class_1"}, 8);
  config.aggregator.attn_dim = 4;
  config.head.hidden_sizes = {6};
  if (config.lora) config.lora->rank = 2;
  return config;
}

inline TrainConfig QuickTrain() {
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.learning_rate = 5e-3;
  cfg.seed = 21;
  return cfg;
}

}  // namespace milpilot::testing
