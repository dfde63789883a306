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

#include "milpilot/train/config.hpp"

#include "milpilot/error.hpp"
#include "milpilot/eval/metrics.hpp"
#include "milpilot/hashing.hpp"

namespace milpilot {

std::string_view OptimizerName(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kAdamW: return "adamw";
    case OptimizerKind::kAdam: return "adam";
    case OptimizerKind::kSgd: return "sgd";
  }
  return "unknown";
}

OptimizerKind ParseOptimizer(std::string_view name) {
  for (auto k : {OptimizerKind::kAdamW, OptimizerKind::kAdam, OptimizerKind::kSgd}) {
    if (OptimizerName(k) == name) return k;
  }
  Fail(ErrorCode::kConfiguration, "unknown optimizer '" + std::string(name) + "'");
}

std::string_view ScheduleName(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kCosineWarmup: return "cosine_warmup";
    case ScheduleKind::kCosine: return "cosine";
    case ScheduleKind::kStep: return "step";
    case ScheduleKind::kConstant: return "constant";
  }
  return "unknown";
}

ScheduleKind ParseSchedule(std::string_view name) {
  for (auto k : {ScheduleKind::kCosineWarmup, ScheduleKind::kCosine, ScheduleKind::kStep,
                 ScheduleKind::kConstant}) {
    if (ScheduleName(k) == name) return k;
  }
  Fail(ErrorCode::kConfiguration, "unknown schedule '" + std::string(name) + "'");
}

std::string TrainConfig::monitored_field() const {
  return monitored_metric.substr(4);
}

void TrainConfig::Validate() const {
  auto require = [](bool ok, const std::string& message) {
    Require(ok, ErrorCode::kConfiguration, message);
  };
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(epochs >= 1, "epochs must be >= 1");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(weight_decay >= 0.0, "weight_decay must be >= 0");
  require(label_smoothing >= 0.0 && label_smoothing < 1.0, "label_smoothing must lie in [0, 1)");
  require(patch_dropout >= 0.0 && patch_dropout < 1.0, "patch_dropout must lie in [0, 1)");
  require(imbalance_threshold >= 1.0, "imbalance_threshold must be >= 1");
  require(early_stop.patience >= 1, "early_stop.patience must be >= 1");
  require(early_stop.improvement_threshold >= 0.0 && early_stop.overfit_gap >= 0.0,
          "early-stop thresholds must be >= 0");
  require(early_stop.overfit_consecutive >= 1, "early_stop.overfit_consecutive must be >= 1");
  require(monitored_metric.rfind("val_", 0) == 0,
          "monitored_metric must name a validation metric (val_*)");
  bool known = false;
  for (const char* name : kMetricNames) known = known || monitored_field() == name;
  require(known, "unknown monitored_metric '" + monitored_metric + "'");
}

Json TrainConfigToJson(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"optimizer", OptimizerName(c.optimizer)},
          {"weight_decay", c.weight_decay},
          {"schedule", ScheduleName(c.schedule)},
          {"label_smoothing", c.label_smoothing},
          {"patch_dropout", c.patch_dropout},
          {"imbalance_threshold", c.imbalance_threshold},
          {"early_stop",
           {{"enabled", c.early_stop.enabled},
            {"patience", c.early_stop.patience},
            {"min_epochs", c.early_stop.min_epochs},
            {"improvement_threshold", c.early_stop.improvement_threshold},
            {"overfit_gap", c.early_stop.overfit_gap},
            {"overfit_consecutive", c.early_stop.overfit_consecutive}}},
          {"monitored_metric", c.monitored_metric},
          {"seed", c.seed}};
}

TrainConfig TrainConfigFromJson(const Json& json) {
  TrainConfig c;
  try {
    c.learning_rate = json.value("learning_rate", c.learning_rate);
    c.epochs = json.value("epochs", c.epochs);
    c.batch_size = json.value("batch_size", c.batch_size);
    if (json.contains("optimizer")) c.optimizer = ParseOptimizer(json["optimizer"].get<std::string>());
    c.weight_decay = json.value("weight_decay", c.weight_decay);
    if (json.contains("schedule")) c.schedule = ParseSchedule(json["schedule"].get<std::string>());
    c.label_smoothing = json.value("label_smoothing", c.label_smoothing);
    c.patch_dropout = json.value("patch_dropout", c.patch_dropout);
    c.imbalance_threshold = json.value("imbalance_threshold", c.imbalance_threshold);
    if (json.contains("early_stop")) {
      const Json& e = json["early_stop"];
      c.early_stop.enabled = e.value("enabled", c.early_stop.enabled);
      c.early_stop.patience = e.value("patience", c.early_stop.patience);
      c.early_stop.min_epochs = e.value("min_epochs", c.early_stop.min_epochs);
      c.early_stop.improvement_threshold =
          e.value("improvement_threshold", c.early_stop.improvement_threshold);
      c.early_stop.overfit_gap = e.value("overfit_gap", c.early_stop.overfit_gap);
      c.early_stop.overfit_consecutive =
          e.value("overfit_consecutive", c.early_stop.overfit_consecutive);
    }
    c.monitored_metric = json.value("monitored_metric", c.monitored_metric);
    c.seed = json.value("seed", c.seed);
  } catch (const Json::exception& e) {
    Fail(ErrorCode::kConfiguration, std::string("malformed train config: ") + e.what());
  }
  c.Validate();
  return c;
}

std::string TrainConfigDigest(const TrainConfig& config) {
  return Sha256Hex(TrainConfigToJson(config).dump());
}

}  // namespace milpilot
