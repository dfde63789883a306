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
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "milpilot/json_io.hpp"
#include "milpilot/model/config.hpp"
#include "milpilot/train/config.hpp"
#include "milpilot/train/trainer.hpp"

namespace milpilot {

enum class TuneMethod { kGrid, kRandom };

std::string_view TuneMethodName(TuneMethod method);
TuneMethod ParseTuneMethod(std::string_view name);

// Candidates are JSON scalars, or integer arrays for hidden_sizes.
struct ParamAxis {
  std::string key;
  std::vector<Json> candidates;
};

struct StageSpec {
  std::string name;
  ParamAxis param_a;
  ParamAxis param_b;
  // Set when a parameter was replaced for the strategy, e.g. attn_dim -> hidden_sizes.
  std::string note;

  std::size_t grid_size() const { return param_a.candidates.size() * param_b.candidates.size(); }
  void Validate() const;
};

// Ordered (key, value) assignments produced by one trial.
using ConfigDelta = std::vector<std::pair<std::string, Json>>;

Json DeltaToJson(const ConfigDelta& delta);

struct TrialOverrides {
  std::size_t patience = 10;
  std::size_t min_epochs = 5;
};

struct TuneConfig {
  TuneMethod method = TuneMethod::kGrid;
  std::size_t n_trials_per_stage = 0;
  std::uint64_t seed = 0;
  std::vector<StageSpec> stages;
  TrialOverrides trial_overrides;

  void Validate() const;
};

Json TuneConfigToJson(const TuneConfig& config);
// Missing "stages" selects DefaultStages(strategy).
TuneConfig TuneConfigFromJson(const Json& json, Strategy strategy);

// Keys a stage may tune.
bool IsTunableKey(std::string_view key);

std::vector<StageSpec> DefaultStages(Strategy strategy);

std::vector<ConfigDelta> EnumerateGrid(const StageSpec& stage);
std::vector<ConfigDelta> SampleRandom(const StageSpec& stage, std::size_t n, std::uint64_t seed,
                                      std::size_t stage_index);

// Deltas the configured method issues for one stage.
std::vector<ConfigDelta> StageTrials(const TuneConfig& config, std::size_t stage_index);

std::size_t StagedTrialCount(const TuneConfig& config);
// Size of the full Cartesian product over every parameter of every stage.
std::size_t ExhaustiveTrialCount(const std::vector<StageSpec>& stages);

void ApplyDelta(const ConfigDelta& delta, TrainConfig& train, ModelConfig& model);

enum class TrialStatus { kCompleted, kFailed };

std::string_view TrialStatusName(TrialStatus status);

struct TrialRecord {
  std::size_t stage_index = 0;
  std::size_t trial_index = 0;
  ConfigDelta config_delta;
  double val_auroc = 0.0;
  std::size_t epochs_run = 0;
  TrialStatus status = TrialStatus::kCompleted;
  std::string message;
  std::string note;

  nlohmann::ordered_json ToEventJson() const;
};

struct TrialOutcome {
  double val_auroc = 0.0;
  std::size_t epochs_run = 0;
};

struct TrialContext {
  std::size_t stage_index = 0;
  std::size_t trial_index = 0;
};

// Runs one isolated trial; throwing marks the trial failed.
using TrialRunner = std::function<TrialOutcome(const TrainConfig&, const ModelConfig&,
                                               const TrialContext&)>;

struct TuneResult {
  TrainConfig best_train;
  ModelConfig best_model;
  // Winning value per tuned key, in stage order.
  ConfigDelta best_values;
  double best_metric = 0.0;
  std::vector<TrialRecord> trials;
};

TuneResult RunTuning(const TuneConfig& tune, const TrainConfig& base_train,
                     const ModelConfig& base_model, const TrialRunner& runner,
                     const std::function<void(const TrialRecord&)>& on_trial = {});

// Trains every trial in this process with fresh model and optimizer state.
TrialRunner InProcessTrialRunner(const DataSplits& splits);

inline constexpr const char* kOutcomeAllowlist[] = {
    "learning_rate",   "attn_dim",     "hidden_sizes", "head_dropout",
    "attn_dropout",    "label_smoothing", "weight_decay", "epochs",
    "batch_size",      "optimizer",    "schedule"};

struct TuneOutcome {
  std::string strategy;
  std::string method;
  Json winning_values = Json::object();
  Json baseline_values = Json::object();
  double winning_metric = 0.0;
  std::string job_hash;

  Json ToJson() const;
  static TuneOutcome FromJson(const Json& json);
};

TuneOutcome AnonymizeOutcome(const std::string& job_id, const std::string& strategy,
                             const std::string& method, const Json& winning,
                             const Json& baseline, double metric);

// Allowlisted values of a configuration pair.
Json TunableValues(const TrainConfig& train, const ModelConfig& model);

}  // namespace milpilot
