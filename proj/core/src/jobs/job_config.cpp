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

#include "milpilot/jobs/job_config.hpp"

#include "milpilot/error.hpp"
#include "milpilot/store/feature_store.hpp"

namespace milpilot {

std::string_view JobKindName(JobKind kind) {
  switch (kind) {
    case JobKind::kTrain:
      return "train";
    case JobKind::kTune:
      return "tune";
    case JobKind::kCompare:
      return "compare";
  }
  return "train";
}

JobKind ParseJobKind(std::string_view name) {
  if (name == "train") return JobKind::kTrain;
  if (name == "tune") return JobKind::kTune;
  if (name == "compare") return JobKind::kCompare;
  Fail(ErrorCode::kValidation, "unknown job kind '" + std::string(name) + "'");
}

void JobConfig::Validate() const {
  Require(!store_dir.empty(), ErrorCode::kValidation, "job config needs store_dir");
  cohort.Validate();
  Require(!cohort.members.empty(), ErrorCode::kValidation, "job cohort is empty");
  Require(model_overrides.is_object(), ErrorCode::kValidation, "model overrides must be an object");
  Require(train_overrides.is_object(), ErrorCode::kValidation, "train overrides must be an object");
  Require(tune.is_object(), ErrorCode::kValidation, "tune section must be an object");
  Require(kfold == 0 || kfold >= 2, ErrorCode::kValidation, "kfold must be 0 or at least 2");
  Require(!(kfold > 0 && kind == JobKind::kTune), ErrorCode::kValidation,
          "kfold is not supported for tune jobs");
  // Resolving surfaces override errors before any process starts.
  ResolveTrainConfig(*this);
  ResolveModelConfig(*this, 1).Validate();
  if (kind == JobKind::kTune) ResolveTuneConfig(*this);
}

Json JobConfigToJson(const JobConfig& config) {
  return {{"job_id", config.job_id},
          {"kind", JobKindName(config.kind)},
          {"store_dir", config.store_dir.string()},
          {"cohort", CohortToJson(config.cohort)},
          {"strategy", StrategyName(config.strategy)},
          {"model", config.model_overrides},
          {"train", config.train_overrides},
          {"split_seed", config.split_seed},
          {"output_dir", config.output_dir.string()},
          {"kfold", config.kfold},
          {"tune", config.tune}};
}

JobConfig JobConfigFromJson(const Json& json) {
  Require(json.is_object(), ErrorCode::kValidation, "job config must be a JSON object");
  JobConfig config;
  try {
    config.job_id = json.value("job_id", std::string());
    config.kind = ParseJobKind(json.value("kind", std::string("train")));
    config.store_dir = json.value("store_dir", std::string());
    Require(json.contains("cohort"), ErrorCode::kValidation, "job config needs a cohort");
    config.cohort = CohortFromJson(json.at("cohort"));
    config.strategy = ParseStrategy(json.value("strategy", std::string("abmil")));
    config.model_overrides = json.value("model", Json::object());
    config.train_overrides = json.value("train", Json::object());
    config.split_seed = json.value("split_seed", std::uint64_t{0});
    config.output_dir = json.value("output_dir", std::string());
    config.kfold = json.value("kfold", std::size_t{0});
    config.tune = json.value("tune", Json::object());
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kValidation, std::string("malformed job config: ") + e.what());
  }
  return config;
}

ModelConfig ResolveModelConfig(const JobConfig& job, std::size_t feature_dim) {
  Json merged =
      ModelConfigToJson(ModelConfig::Default(job.strategy, job.cohort.class_names, feature_dim));
  merged.merge_patch(job.model_overrides);
  // Identity fields always come from the job and the store.
  merged["strategy"] = StrategyName(job.strategy);
  merged["class_labels"] = job.cohort.class_names;
  merged["feature_dim"] = feature_dim;
  try {
    ModelConfig config = ModelConfigFromJson(merged);
    config.Validate();
    return config;
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kConfiguration, std::string("bad model overrides: ") + e.what());
  }
}

TrainConfig ResolveTrainConfig(const JobConfig& job) {
  Json merged = TrainConfigToJson(TrainConfig{});
  merged.merge_patch(job.train_overrides);
  try {
    TrainConfig config = TrainConfigFromJson(merged);
    config.Validate();
    return config;
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kConfiguration, std::string("bad train overrides: ") + e.what());
  }
}

TuneConfig ResolveTuneConfig(const JobConfig& job) {
  return TuneConfigFromJson(job.tune, job.strategy);
}

}  // namespace milpilot
