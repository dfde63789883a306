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

#include "milpilot/tune/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "milpilot/error.hpp"
#include "milpilot/hashing.hpp"
#include "milpilot/random.hpp"

namespace milpilot {

std::string_view TuneMethodName(TuneMethod method) {
  return method == TuneMethod::kGrid ? "grid" : "random";
}

TuneMethod ParseTuneMethod(std::string_view name) {
  if (name == "grid") return TuneMethod::kGrid;
  if (name == "random") return TuneMethod::kRandom;
  Fail(ErrorCode::kConfiguration, "unknown tuning method '" + std::string(name) + "'");
}

std::string_view TrialStatusName(TrialStatus status) {
  return status == TrialStatus::kCompleted ? "completed" : "failed";
}

bool IsTunableKey(std::string_view key) {
  for (const char* allowed : kOutcomeAllowlist) {
    if (key == allowed) return true;
  }
  return false;
}

void StageSpec::Validate() const {
  for (const ParamAxis* axis : {&param_a, &param_b}) {
    Require(IsTunableKey(axis->key), ErrorCode::kConfiguration,
            "stage '" + name + "' tunes unknown key '" + axis->key + "'");
    Require(axis->candidates.size() >= 2, ErrorCode::kConfiguration,
            "stage '" + name + "' needs at least two candidates for " + axis->key);
    std::set<std::string> seen;
    for (const Json& c : axis->candidates) {
      Require(seen.insert(c.dump()).second, ErrorCode::kConfiguration,
              "stage '" + name + "' repeats candidate " + c.dump() + " for " + axis->key);
    }
  }
  Require(param_a.key != param_b.key, ErrorCode::kConfiguration,
          "stage '" + name + "' tunes " + param_a.key + " twice");
}

void TuneConfig::Validate() const {
  Require(!stages.empty(), ErrorCode::kConfiguration, "tuning needs at least one stage");
  if (method == TuneMethod::kRandom) {
    Require(n_trials_per_stage >= 1, ErrorCode::kConfiguration,
            "random tuning needs n_trials_per_stage >= 1");
  }
  for (const StageSpec& stage : stages) stage.Validate();
}

Json DeltaToJson(const ConfigDelta& delta) {
  Json json = Json::object();
  for (const auto& [key, value] : delta) json[key] = value;
  return json;
}

namespace {

Json AxisToJson(const ParamAxis& axis) {
  return {{"key", axis.key}, {"candidates", axis.candidates}};
}

ParamAxis AxisFromJson(const Json& json) {
  ParamAxis axis;
  axis.key = json.at("key").get<std::string>();
  axis.candidates = json.at("candidates").get<std::vector<Json>>();
  return axis;
}

std::vector<Json> Numbers(std::initializer_list<double> values) {
  return {values.begin(), values.end()};
}

std::vector<Json> Integers(std::initializer_list<int> values) {
  return {values.begin(), values.end()};
}

}  // namespace

Json TuneConfigToJson(const TuneConfig& config) {
  Json stages = Json::array();
  for (const StageSpec& stage : config.stages) {
    Json s = {{"name", stage.name},
              {"param_a", AxisToJson(stage.param_a)},
              {"param_b", AxisToJson(stage.param_b)}};
    if (!stage.note.empty()) s["note"] = stage.note;
    stages.push_back(std::move(s));
  }
  return {{"method", TuneMethodName(config.method)},
          {"n_trials_per_stage", config.n_trials_per_stage},
          {"seed", config.seed},
          {"stages", std::move(stages)},
          {"trial_overrides",
           {{"patience", config.trial_overrides.patience},
            {"min_epochs", config.trial_overrides.min_epochs}}}};
}

TuneConfig TuneConfigFromJson(const Json& json, Strategy strategy) {
  TuneConfig config;
  try {
    config.method = ParseTuneMethod(json.value("method", std::string("grid")));
    config.n_trials_per_stage = json.value("n_trials_per_stage", std::size_t{0});
    config.seed = json.value("seed", std::uint64_t{0});
    if (json.contains("stages")) {
      for (const Json& s : json.at("stages")) {
        StageSpec stage;
        stage.name = s.value("name", std::string("stage"));
        stage.param_a = AxisFromJson(s.at("param_a"));
        stage.param_b = AxisFromJson(s.at("param_b"));
        stage.note = s.value("note", std::string());
        config.stages.push_back(std::move(stage));
      }
    } else {
      config.stages = DefaultStages(strategy);
    }
    if (json.contains("trial_overrides")) {
      const Json& o = json.at("trial_overrides");
      config.trial_overrides.patience = o.value("patience", config.trial_overrides.patience);
      config.trial_overrides.min_epochs =
          o.value("min_epochs", config.trial_overrides.min_epochs);
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kConfiguration, std::string("malformed tuning config: ") + e.what());
  }
  config.Validate();
  return config;
}

std::vector<StageSpec> DefaultStages(Strategy strategy) {
  const bool attention = strategy != Strategy::kPooling;
  StageSpec capacity{"learning_rate_capacity",
                     {"learning_rate", Numbers({5e-5, 2e-4, 1e-3, 5e-3})},
                     {attention ? "attn_dim" : "hidden_sizes", Integers({64, 128, 256})},
                     attention ? "" : "attn_dim replaced by hidden_sizes"};
  StageSpec regularization{"regularization",
                           {"head_dropout", Numbers({0.1, 0.3, 0.5, 0.6})},
                           {"attn_dropout", Numbers({0.05, 0.2, 0.4})},
                           ""};
  StageSpec loss_shaping{"loss_shaping",
                         {"label_smoothing", Numbers({0.0, 0.1, 0.2})},
                         {"weight_decay", Numbers({1e-3, 1e-2, 1e-1})},
                         ""};
  return {capacity, regularization, loss_shaping};
}

std::vector<ConfigDelta> EnumerateGrid(const StageSpec& stage) {
  std::vector<ConfigDelta> grid;
  grid.reserve(stage.grid_size());
  for (const Json& a : stage.param_a.candidates) {
    for (const Json& b : stage.param_b.candidates) {
      grid.push_back({{stage.param_a.key, a}, {stage.param_b.key, b}});
    }
  }
  return grid;
}

std::vector<ConfigDelta> SampleRandom(const StageSpec& stage, std::size_t n, std::uint64_t seed,
                                      std::size_t stage_index) {
  Require(n >= 1, ErrorCode::kConfiguration, "random sampling needs n >= 1");
  std::vector<ConfigDelta> grid = EnumerateGrid(stage);
  if (n >= grid.size()) return grid;
  SplitMix64 rng(seed + stage_index);
  std::vector<ConfigDelta> picked;
  picked.reserve(n);
  for (std::size_t index : PartialShuffleIndices(grid.size(), n, rng)) {
    picked.push_back(grid[index]);
  }
  return picked;
}

std::vector<ConfigDelta> StageTrials(const TuneConfig& config, std::size_t stage_index) {
  const StageSpec& stage = config.stages.at(stage_index);
  if (config.method == TuneMethod::kGrid) return EnumerateGrid(stage);
  return SampleRandom(stage, config.n_trials_per_stage, config.seed, stage_index);
}

std::size_t StagedTrialCount(const TuneConfig& config) {
  std::size_t total = 0;
  for (const StageSpec& stage : config.stages) {
    total += config.method == TuneMethod::kGrid
                 ? stage.grid_size()
                 : std::min(config.n_trials_per_stage, stage.grid_size());
  }
  return total;
}

std::size_t ExhaustiveTrialCount(const std::vector<StageSpec>& stages) {
  std::size_t total = 1;
  for (const StageSpec& stage : stages) total *= stage.grid_size();
  return total;
}

void ApplyDelta(const ConfigDelta& delta, TrainConfig& train, ModelConfig& model) {
  for (const auto& [key, value] : delta) {
    try {
      if (key == "learning_rate") {
        train.learning_rate = value.get<double>();
      } else if (key == "weight_decay") {
        train.weight_decay = value.get<double>();
      } else if (key == "label_smoothing") {
        train.label_smoothing = value.get<double>();
      } else if (key == "epochs") {
        train.epochs = value.get<std::size_t>();
      } else if (key == "batch_size") {
        train.batch_size = value.get<std::size_t>();
      } else if (key == "optimizer") {
        train.optimizer = ParseOptimizer(value.get<std::string>());
      } else if (key == "schedule") {
        train.schedule = ParseSchedule(value.get<std::string>());
      } else if (key == "attn_dim") {
        model.aggregator.attn_dim = value.get<std::size_t>();
      } else if (key == "attn_dropout") {
        model.aggregator.attn_dropout = value.get<double>();
      } else if (key == "head_dropout") {
        model.head.dropout = value.get<double>();
      } else if (key == "hidden_sizes") {
        model.head.hidden_sizes = value.is_array() ? value.get<std::vector<std::size_t>>()
                                                   : std::vector<std::size_t>{value.get<std::size_t>()};
      } else {
        Fail(ErrorCode::kConfiguration, "cannot tune key '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorCode::kConfiguration, "bad value " + value.dump() + " for " + key + ": " + e.what());
    }
  }
}

nlohmann::ordered_json TrialRecord::ToEventJson() const {
  nlohmann::ordered_json event;
  event["type"] = "trial";
  event["stage_index"] = stage_index;
  event["trial_index"] = trial_index;
  event["config_delta"] = DeltaToJson(config_delta);
  event["val_auroc"] = val_auroc;
  event["epochs_run"] = epochs_run;
  event["status"] = TrialStatusName(status);
  if (!message.empty()) event["message"] = message;
  if (!note.empty()) event["note"] = note;
  return event;
}

TuneResult RunTuning(const TuneConfig& tune, const TrainConfig& base_train,
                     const ModelConfig& base_model, const TrialRunner& runner,
                     const std::function<void(const TrialRecord&)>& on_trial) {
  tune.Validate();
  TuneResult result;
  result.best_train = base_train;
  result.best_model = base_model;

  for (std::size_t s = 0; s < tune.stages.size(); ++s) {
    const std::vector<ConfigDelta> deltas = StageTrials(tune, s);
    std::size_t winner = deltas.size();
    double winner_score = -std::numeric_limits<double>::infinity();
    std::string statuses;

    for (std::size_t t = 0; t < deltas.size(); ++t) {
      TrialRecord record;
      record.stage_index = s;
      record.trial_index = t;
      record.config_delta = deltas[t];
      record.note = tune.stages[s].note;

      TrainConfig train = result.best_train;
      ModelConfig model = result.best_model;
      try {
        ApplyDelta(deltas[t], train, model);
        train.early_stop.patience = tune.trial_overrides.patience;
        train.early_stop.min_epochs = tune.trial_overrides.min_epochs;
        const TrialOutcome outcome = runner(train, model, TrialContext{s, t});
        Require(std::isfinite(outcome.val_auroc), ErrorCode::kNumeric,
                "trial returned a non-finite val_auroc");
        record.val_auroc = outcome.val_auroc;
        record.epochs_run = outcome.epochs_run;
        if (outcome.val_auroc > winner_score) {
          winner_score = outcome.val_auroc;
          winner = t;
        }
      } catch (const std::exception& e) {
        record.status = TrialStatus::kFailed;
        record.message = e.what();
      }
      statuses += (statuses.empty() ? "" : "; ") + std::to_string(t) + ":" +
                  std::string(TrialStatusName(record.status)) +
                  (record.message.empty() ? "" : " (" + record.message + ")");
      if (on_trial) on_trial(record);
      result.trials.push_back(std::move(record));
    }

    Require(winner < deltas.size(), ErrorCode::kStageFailure,
            "every trial of stage '" + tune.stages[s].name + "' failed: " + statuses);
    ApplyDelta(deltas[winner], result.best_train, result.best_model);
    for (const auto& assignment : deltas[winner]) result.best_values.push_back(assignment);
    result.best_metric = winner_score;
  }
  return result;
}

TrialRunner InProcessTrialRunner(const DataSplits& splits) {
  return [splits](const TrainConfig& train, const ModelConfig& model, const TrialContext&) {
    const TrainingResult run = RunTraining(train, model, splits);
    return TrialOutcome{run.best_val_metrics.auroc, run.epochs_run};
  };
}

namespace {

Json FilterAllowlisted(const Json& values) {
  Json out = Json::object();
  if (!values.is_object()) return out;
  for (const char* key : kOutcomeAllowlist) {
    auto it = values.find(key);
    if (it == values.end()) continue;
    // Only plain values survive; nested objects could smuggle identifiers.
    if (it->is_object()) continue;
    if (it->is_array() &&
        !std::all_of(it->begin(), it->end(), [](const Json& v) { return v.is_number(); })) {
      continue;
    }
    if (it->is_string() && key != std::string_view("optimizer") &&
        key != std::string_view("schedule")) {
      continue;
    }
    out[key] = *it;
  }
  return out;
}

}  // namespace

Json TuneOutcome::ToJson() const {
  return {{"strategy", strategy},
          {"method", method},
          {"winning_values", winning_values},
          {"baseline_values", baseline_values},
          {"winning_metric", winning_metric},
          {"job_hash", job_hash}};
}

TuneOutcome TuneOutcome::FromJson(const Json& json) {
  TuneOutcome outcome;
  outcome.strategy = json.at("strategy").get<std::string>();
  outcome.method = json.at("method").get<std::string>();
  outcome.winning_values = FilterAllowlisted(json.value("winning_values", Json::object()));
  outcome.baseline_values = FilterAllowlisted(json.value("baseline_values", Json::object()));
  outcome.winning_metric = json.at("winning_metric").get<double>();
  outcome.job_hash = json.at("job_hash").get<std::string>();
  return outcome;
}

TuneOutcome AnonymizeOutcome(const std::string& job_id, const std::string& strategy,
                             const std::string& method, const Json& winning,
                             const Json& baseline, double metric) {
  TuneOutcome outcome;
  outcome.strategy = std::string(StrategyName(ParseStrategy(strategy)));
  outcome.method = std::string(TuneMethodName(ParseTuneMethod(method)));
  outcome.winning_values = FilterAllowlisted(winning);
  outcome.baseline_values = FilterAllowlisted(baseline);
  outcome.winning_metric = metric;
  outcome.job_hash = Sha256Hex(job_id);
  return outcome;
}

Json TunableValues(const TrainConfig& train, const ModelConfig& model) {
  Json values = {{"learning_rate", train.learning_rate},
                 {"hidden_sizes", model.head.hidden_sizes},
                 {"head_dropout", model.head.dropout},
                 {"label_smoothing", train.label_smoothing},
                 {"weight_decay", train.weight_decay},
                 {"epochs", train.epochs},
                 {"batch_size", train.batch_size},
                 {"optimizer", OptimizerName(train.optimizer)},
                 {"schedule", ScheduleName(train.schedule)}};
  if (model.uses_attention()) {
    values["attn_dim"] = model.aggregator.attn_dim;
    values["attn_dropout"] = model.aggregator.attn_dropout;
  }
  return values;
}

}  // namespace milpilot
