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

#include "milpilot/train/trainer.hpp"

#include <cstdio>
#include <iostream>
#include <limits>
#include <set>

#include "milpilot/error.hpp"
#include "milpilot/model/mil_model.hpp"
#include "milpilot/random.hpp"
#include "milpilot/store/collate.hpp"
#include "milpilot/train/sampling.hpp"
#include "milpilot/train/schedule.hpp"

namespace milpilot {

std::string_view SplitNameString(SplitName split) {
  switch (split) {
    case SplitName::kTrain: return "train";
    case SplitName::kVal: return "val";
    case SplitName::kTest: return "test";
  }
  return "unknown";
}

nlohmann::ordered_json EpochMetrics::ToEventJson() const {
  nlohmann::ordered_json event;
  event["type"] = "epoch";
  event["epoch"] = epoch;
  event["split"] = SplitNameString(split);
  event["loss"] = loss;
  event["auroc"] = metrics.auroc;
  event["pr_auc"] = metrics.pr_auc;
  event["balanced_accuracy"] = metrics.balanced_accuracy;
  event["macro_f1"] = metrics.macro_f1;
  event["macro_precision"] = metrics.macro_precision;
  event["accuracy"] = metrics.accuracy;
  event["learning_rate"] = learning_rate;
  if (!metrics.skipped_classes.empty()) event["skipped_classes"] = metrics.skipped_classes;
  return event;
}

void StdoutSink::Emit(const nlohmann::ordered_json& event) {
  std::cout << kTrainerPrefix << event.dump() << '\n' << std::flush;
}

Evaluation EvaluateBags(const ParamSet<float>& params, const ModelConfig& config,
                        const std::vector<const PatchFeatureBag*>& bags, double label_smoothing,
                        std::size_t batch_size) {
  Evaluation eval;
  eval.probs.resize(static_cast<Eigen::Index>(bags.size()),
                    static_cast<Eigen::Index>(config.num_classes()));
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < bags.size(); start += batch_size) {
    const std::size_t end = std::min(bags.size(), start + batch_size);
    const std::span<const PatchFeatureBag* const> chunk(bags.data() + start, end - start);
    const Batch batch = Collate(chunk);
    const auto result =
        ComputeLoss<float>(params, config, batch, LossConfig{label_smoothing}, Mode::kEval, 0);
    loss_sum += static_cast<double>(result.loss) * static_cast<double>(end - start);
    for (std::size_t b = 0; b < end - start; ++b) {
      eval.probs.row(static_cast<Eigen::Index>(start + b)) =
          result.probs.row(static_cast<Eigen::Index>(b)).cast<double>();
      eval.labels.push_back(batch.labels[b]);
    }
  }
  eval.loss = bags.empty() ? 0.0 : loss_sum / static_cast<double>(bags.size());
  return eval;
}

namespace {

void CheckSplitCoverage(const std::vector<const PatchFeatureBag*>& bags, std::size_t classes,
                        std::string_view split) {
  std::set<int> seen;
  for (const PatchFeatureBag* bag : bags) {
    Require(bag->label.has_value() && *bag->label >= 0 &&
                static_cast<std::size_t>(*bag->label) < classes,
            ErrorCode::kValidation,
            "bag " + bag->case_id + "/" + bag->slide_id + " lacks a valid label");
    seen.insert(*bag->label);
  }
  for (std::size_t c = 0; c < classes; ++c) {
    Require(seen.count(static_cast<int>(c)) > 0, ErrorCode::kGuardrail,
            "class " + std::to_string(c) + " has no samples in the " + std::string(split) +
                " split");
  }
}

EpochMetrics MakeEpochMetrics(std::size_t epoch, SplitName split, const Evaluation& eval,
                              double lr) {
  EpochMetrics m;
  m.epoch = epoch;
  m.split = split;
  m.loss = eval.loss;
  m.metrics = ComputeMetrics(eval.probs, eval.labels);
  m.learning_rate = lr;
  return m;
}

nlohmann::ordered_json MetricsJson(const MetricSet& metrics) {
  nlohmann::ordered_json j;
  for (const char* name : kMetricNames) j[name] = metrics.Get(name);
  return j;
}

}  // namespace

TrainingResult RunTraining(const TrainConfig& cfg, const ModelConfig& model_config,
                           const DataSplits& splits, const TrainingOptions& options) {
  cfg.Validate();
  model_config.Validate();
  Require(!splits.train.empty() && !splits.val.empty(), ErrorCode::kGuardrail,
          "training needs non-empty train and val splits");
  const std::size_t classes = model_config.num_classes();
  CheckSplitCoverage(splits.train, classes, "train");
  CheckSplitCoverage(splits.val, classes, "val");
  for (const auto* group : {&splits.train, &splits.val, &splits.test}) {
    for (const PatchFeatureBag* bag : *group) {
      Require(bag->feature_dim == model_config.feature_dim, ErrorCode::kDimensionMismatch,
              "bag " + bag->case_id + "/" + bag->slide_id + " feature_dim does not match model");
    }
  }

  MetricSink* sink = options.sink;
  auto emit = [&](const nlohmann::ordered_json& event) {
    if (sink != nullptr) sink->Emit(event);
  };

  std::vector<int> train_labels;
  for (const PatchFeatureBag* bag : splits.train) train_labels.push_back(*bag->label);

  ParamSet<float> params = InitParams<float>(model_config, DeriveSeed(cfg.seed, "init"));
  OptimizerState optimizer = MakeOptimizerState(cfg.optimizer);
  const LossConfig loss_config{cfg.label_smoothing};
  const std::string monitored = cfg.monitored_field();
  const std::string digest = TrainConfigDigest(cfg);

  TrainingResult result;
  result.best.best_metric_value = -std::numeric_limits<double>::infinity();
  std::vector<MonitoredPoint> monitored_history;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = LearningRateAt(cfg.schedule, cfg.learning_rate, epoch, cfg.epochs);
    const EpochOrder order =
        BuildSampler(train_labels, cfg.imbalance_threshold, DeriveSeed(cfg.seed, "sampler", {epoch}));

    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.indices.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.indices.size(), start + cfg.batch_size);
      std::vector<PatchFeatureBag> augmented;
      augmented.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t slide = order.indices[i];
        augmented.push_back(PatchDropout(*splits.train[slide], cfg.patch_dropout,
                                         DeriveSeed(cfg.seed, "patch_dropout", {epoch, slide}),
                                         true));
      }
      const Batch batch = Collate(augmented);
      const auto step = LossAndGrads<float>(params, model_config, batch, loss_config, Mode::kTrain,
                                            DeriveSeed(cfg.seed, "dropout", {epoch, batch_index}));
      OptimizerStep(optimizer, params, step.grads, lr, cfg.weight_decay);
    }

    const auto train_eval =
        EvaluateBags(params, model_config, splits.train, cfg.label_smoothing, cfg.batch_size);
    const auto val_eval =
        EvaluateBags(params, model_config, splits.val, cfg.label_smoothing, cfg.batch_size);
    const EpochMetrics train_metrics = MakeEpochMetrics(epoch, SplitName::kTrain, train_eval, lr);
    const EpochMetrics val_metrics = MakeEpochMetrics(epoch, SplitName::kVal, val_eval, lr);
    emit(train_metrics.ToEventJson());
    emit(val_metrics.ToEventJson());
    result.history.push_back(train_metrics);
    result.history.push_back(val_metrics);
    result.epochs_run = epoch + 1;

    const double value = val_metrics.metrics.Get(monitored);
    monitored_history.push_back({epoch, train_metrics.metrics.Get(monitored), value});
    if (value > result.best.best_metric_value) {
      result.best.model_config = model_config;
      result.best.weights = params;
      result.best.optimizer = optimizer;
      result.best.best_epoch = epoch;
      result.best.best_metric_value = value;
      result.best.monitored_metric = cfg.monitored_metric;
      result.best.train_config_digest = digest;
      result.best_val_metrics = val_metrics.metrics;
      if (!options.output_dir.empty()) SaveCheckpoint(result.best, options.output_dir);
      nlohmann::ordered_json event;
      event["type"] = "checkpoint";
      event["epoch"] = epoch;
      event["monitored_metric"] = cfg.monitored_metric;
      event["value"] = value;
      emit(event);
    }

    result.stop = EarlyStopCheck(monitored_history, cfg.early_stop);
    if (result.stop != StopDecision::kContinue) break;
  }

  if (!splits.test.empty()) {
    const auto test_eval =
        EvaluateBags(result.best.weights, model_config, splits.test, cfg.label_smoothing,
                     cfg.batch_size);
    result.test_metrics = ComputeMetrics(test_eval.probs, test_eval.labels);
  }

  nlohmann::ordered_json final_event;
  final_event["type"] = "final";
  final_event["best_epoch"] = result.best.best_epoch;
  final_event["best_metric_value"] = result.best.best_metric_value;
  final_event["monitored_metric"] = cfg.monitored_metric;
  final_event["epochs_run"] = result.epochs_run;
  final_event["stop_reason"] =
      result.stop == StopDecision::kContinue ? "completed" : StopDecisionName(result.stop);
  final_event["val"] = MetricsJson(result.best_val_metrics);
  final_event["test"] = result.test_metrics ? MetricsJson(*result.test_metrics)
                                            : nlohmann::ordered_json(nullptr);
  emit(final_event);
  return result;
}

}  // namespace milpilot
