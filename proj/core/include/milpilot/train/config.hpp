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
#include <string_view>

#include "milpilot/json_io.hpp"

namespace milpilot {

enum class OptimizerKind { kAdamW, kAdam, kSgd };
enum class ScheduleKind { kCosineWarmup, kCosine, kStep, kConstant };

std::string_view OptimizerName(OptimizerKind kind);
OptimizerKind ParseOptimizer(std::string_view name);
std::string_view ScheduleName(ScheduleKind kind);
ScheduleKind ParseSchedule(std::string_view name);

struct EarlyStopConfig {
  bool enabled = true;
  std::size_t patience = 15;
  std::size_t min_epochs = 10;
  double improvement_threshold = 0.02;
  double overfit_gap = 0.15;
  std::size_t overfit_consecutive = 3;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 50;
  std::size_t batch_size = 4;
  OptimizerKind optimizer = OptimizerKind::kAdamW;
  double weight_decay = 1e-2;
  ScheduleKind schedule = ScheduleKind::kCosineWarmup;
  double label_smoothing = 0.1;
  double patch_dropout = 0.1;
  double imbalance_threshold = 1.5;
  EarlyStopConfig early_stop;
  // "val_<metric>" for any EpochMetrics metric field; higher is better.
  std::string monitored_metric = "val_auroc";
  std::uint64_t seed = 0;

  void Validate() const;
  // Metric name without the "val_" prefix.
  std::string monitored_field() const;
};

Json TrainConfigToJson(const TrainConfig& config);
TrainConfig TrainConfigFromJson(const Json& json);

// SHA-256 over the canonical JSON form.
std::string TrainConfigDigest(const TrainConfig& config);

}  // namespace milpilot
