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
#include <filesystem>
#include <optional>
#include <string>

#include "milpilot/json_io.hpp"
#include "milpilot/model/config.hpp"
#include "milpilot/store/types.hpp"
#include "milpilot/train/config.hpp"
#include "milpilot/tune/tuner.hpp"

namespace milpilot {

enum class JobKind { kTrain, kTune, kCompare };

std::string_view JobKindName(JobKind kind);
JobKind ParseJobKind(std::string_view name);

// Everything a trainer process needs. "model" and "train" hold partial
// overrides merged (RFC 7386) onto the strategy and training defaults.
struct JobConfig {
  std::string job_id;
  JobKind kind = JobKind::kTrain;
  std::filesystem::path store_dir;
  CohortSpec cohort;
  Strategy strategy = Strategy::kAbmil;
  Json model_overrides = Json::object();
  Json train_overrides = Json::object();
  std::uint64_t split_seed = 0;
  std::filesystem::path output_dir;
  // 0 disables cross-validation.
  std::size_t kfold = 0;
  Json tune = Json::object();

  void Validate() const;
};

Json JobConfigToJson(const JobConfig& config);
JobConfig JobConfigFromJson(const Json& json);

ModelConfig ResolveModelConfig(const JobConfig& job, std::size_t feature_dim);
TrainConfig ResolveTrainConfig(const JobConfig& job);
TuneConfig ResolveTuneConfig(const JobConfig& job);

}  // namespace milpilot
