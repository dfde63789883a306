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
#include <filesystem>
#include <string>

#include "milpilot/model/config.hpp"
#include "milpilot/model/params.hpp"
#include "milpilot/train/optimizer.hpp"

namespace milpilot {

// Manifest (JSON) + blob (little-endian float32 tensors back to back).
inline constexpr const char* kCheckpointBlob = "checkpoint_best.bin";
inline constexpr const char* kCheckpointManifest = "checkpoint_best.manifest.json";

struct CheckpointRecord {
  ModelConfig model_config;
  ParamSet<float> weights;
  OptimizerState optimizer;
  std::size_t best_epoch = 0;
  double best_metric_value = 0.0;
  std::string monitored_metric = "val_auroc";
  std::string train_config_digest;
};

// Writes `<dir>/checkpoint_best.bin` and `<dir>/checkpoint_best.manifest.json`.
void SaveCheckpoint(const CheckpointRecord& record, const std::filesystem::path& dir);

// Throws kIntegrity on a missing/short blob, checksum mismatch, or a manifest
// whose tensors disagree with the model config.
CheckpointRecord LoadCheckpoint(const std::filesystem::path& dir);

}  // namespace milpilot
