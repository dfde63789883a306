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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "milpilot/eval/metrics.hpp"
#include "milpilot/model/config.hpp"
#include "milpilot/train/checkpoint.hpp"
#include "milpilot/train/config.hpp"
#include "milpilot/train/early_stopping.hpp"

namespace milpilot {

enum class SplitName { kTrain, kVal, kTest };
std::string_view SplitNameString(SplitName split);

struct EpochMetrics {
  std::size_t epoch = 0;
  SplitName split = SplitName::kTrain;
  double loss = 0.0;
  MetricSet metrics;
  double learning_rate = 0.0;

  nlohmann::ordered_json ToEventJson() const;
};

// Structured trainer output. The stdout sink prefixes each object with "[trainer] ".
class MetricSink {
 public:
  virtual ~MetricSink() = default;
  virtual void Emit(const nlohmann::ordered_json& event) = 0;
};

class StdoutSink : public MetricSink {
 public:
  void Emit(const nlohmann::ordered_json& event) override;
};

class CollectingSink : public MetricSink {
 public:
  void Emit(const nlohmann::ordered_json& event) override { events.push_back(event); }
  std::vector<nlohmann::ordered_json> events;
};

inline constexpr const char* kTrainerPrefix = "[trainer] ";

struct DataSplits {
  std::vector<const PatchFeatureBag*> train;
  std::vector<const PatchFeatureBag*> val;
  std::vector<const PatchFeatureBag*> test;
};

struct TrainingOptions {
  // Where checkpoint_best.* is written on every improvement; empty = memory only.
  std::filesystem::path output_dir;
  MetricSink* sink = nullptr;
};

struct TrainingResult {
  std::vector<EpochMetrics> history;
  CheckpointRecord best;
  MetricSet best_val_metrics;
  std::optional<MetricSet> test_metrics;
  StopDecision stop = StopDecision::kContinue;
  std::size_t epochs_run = 0;
};

// Deterministic training loop; see README for the per-epoch sequence.
// Throws kGuardrail when a class is absent from train or val.
TrainingResult RunTraining(const TrainConfig& train_config, const ModelConfig& model_config,
                           const DataSplits& splits, const TrainingOptions& options = {});

// Eval-mode probabilities and mean loss over a list of bags.
struct Evaluation {
  ProbMatrix probs;
  std::vector<int> labels;
  double loss = 0.0;
};

Evaluation EvaluateBags(const ParamSet<float>& params, const ModelConfig& config,
                        const std::vector<const PatchFeatureBag*>& bags, double label_smoothing,
                        std::size_t batch_size);

}  // namespace milpilot
