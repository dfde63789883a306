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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "milpilot/json_io.hpp"
#include "milpilot/model/config.hpp"
#include "milpilot/model/params.hpp"
#include "milpilot/store/types.hpp"

namespace milpilot {

inline constexpr const char* kModelConfigFile = "model_config.json";

// `{artifact_root}/{job_id}`; rejects ids that would escape the root.
std::filesystem::path ArtifactPath(const std::filesystem::path& artifact_root,
                                   const std::string& job_id);

// Copies the best checkpoint of checkpoint_dir next to its model_config.json
// under ArtifactPath. Repeating the call rewrites identical bytes.
// Throws kIntegrity when the checkpoint is missing or corrupt.
std::filesystem::path PackageArtifacts(const std::filesystem::path& checkpoint_dir,
                                       const std::string& job_id,
                                       const std::filesystem::path& artifact_root);

struct LoadedModel {
  ModelConfig config;
  ParamSet<float> weights;
};

// Rebuilds the model from the artifact directory alone. Throws kIntegrity when
// the weights disagree with model_config.json or fail their checksum.
LoadedModel LoadModel(const std::filesystem::path& artifact_dir);

struct InferenceResult {
  std::map<std::string, double> probabilities;
  std::string predicted_label;
  std::optional<std::vector<double>> attention;

  Json ToJson() const;
};

// Eval-mode forward on a single bag. Throws kDimensionMismatch on a feature
// width the model was not built for.
InferenceResult Predict(const LoadedModel& model, const PatchFeatureBag& bag);

}  // namespace milpilot
