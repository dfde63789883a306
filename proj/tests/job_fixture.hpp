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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "milpilot/json_io.hpp"
#include "milpilot/store/feature_store.hpp"
#include "milpilot/store/synthetic.hpp"

namespace milpilot::testing {

// Small planted-signal store plus its cohort.
struct TinyStore {
  std::filesystem::path dir;
  CohortSpec cohort;
  std::vector<PatchFeatureBag> bags;
};

inline TinyStore WriteTinyStore(const std::filesystem::path& dir, std::size_t per_class = 34,
                                double strength = 2.5, std::uint64_t seed = 11) {
  SyntheticSpec spec;
  spec.cases_per_class = {per_class, per_class};
  spec.patches_min = 6;
  spec.patches_max = 14;
  spec.feature_dim = 8;
  spec.signal_fraction = 0.3;
  spec.signal_strength = strength;
  spec.seed = seed;
  TinyStore store;
  store.dir = dir;
  store.bags = GenerateSynthetic(spec);
  WriteStore(store.bags, 4, dir);
  store.cohort = CohortForBags(store.bags);
  return store;
}

// Job config body accepted by the orchestrator and the runner: a few quick epochs.
inline Json FastJobJson(const TinyStore& store, const std::string& strategy = "abmil",
                        std::size_t epochs = 3) {
  return {{"store_dir", store.dir.string()},
          {"cohort", CohortToJson(store.cohort)},
          {"strategy", strategy},
          {"split_seed", 5},
          {"model",
           {{"aggregator", {{"attn_dim", 4}}},
            {"head", {{"hidden_sizes", {6}}}},
            {"lora", strategy == "lora" ? Json{{"rank", 2}} : Json(nullptr)}}},
          {"train",
           {{"epochs", epochs},
            {"learning_rate", 5e-3},
            {"seed", 7},
            {"early_stop", {{"enabled", false}}}}}};
}

// Two stages of four trials each.
inline Json SmallTuneJson() {
  return {{"method", "grid"},
          {"seed", 3},
          {"stages",
           {{{"name", "lr"},
             {"param_a", {{"key", "learning_rate"}, {"candidates", {1e-3, 5e-3}}}},
             {"param_b", {{"key", "weight_decay"}, {"candidates", {1e-2, 1e-1}}}}},
            {{"name", "reg"},
             {"param_a", {{"key", "head_dropout"}, {"candidates", {0.1, 0.3}}}},
             {"param_b", {{"key", "label_smoothing"}, {"candidates", {0.0, 0.1}}}}}}},
          {"trial_overrides", {{"patience", 2}, {"min_epochs", 1}}}};
}

inline std::string ReadText(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace milpilot::testing
