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

#include "milpilot/jobs/job_runner.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>

#include "milpilot/error.hpp"
#include "milpilot/eval/splits.hpp"
#include "milpilot/jobs/process.hpp"
#include "milpilot/store/feature_store.hpp"

namespace milpilot {

namespace fs = std::filesystem;

namespace {

using OrderedJson = nlohmann::ordered_json;

std::vector<const PatchFeatureBag*> Select(const std::vector<PatchFeatureBag>& bags,
                                           const std::vector<std::size_t>& indices) {
  std::vector<const PatchFeatureBag*> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(&bags[i]);
  return out;
}

// Tags every event with its fold; the per-fold final becomes a "fold" event.
class FoldSink : public MetricSink {
 public:
  FoldSink(MetricSink& inner, std::size_t fold) : inner_(inner), fold_(fold) {}

  void Emit(const OrderedJson& event) override {
    OrderedJson tagged;
    for (auto it = event.begin(); it != event.end(); ++it) {
      if (it.key() == "type" && it.value() == "final") {
        tagged["type"] = "fold";
      } else {
        tagged[it.key()] = it.value();
      }
      if (it.key() == "type") tagged["fold"] = fold_;
    }
    inner_.Emit(tagged);
  }

 private:
  MetricSink& inner_;
  std::size_t fold_;
};

void RunCrossValidation(const JobConfig& job, const TrainConfig& train, const ModelConfig& model,
                        const std::vector<PatchFeatureBag>& bags, const std::vector<int>& labels,
                        const SplitAssignment& split, MetricSink& sink) {
  // Folds cover train and val; the held-out test set stays out of every fold.
  std::vector<std::size_t> pool = split.train;
  pool.insert(pool.end(), split.val.begin(), split.val.end());
  std::sort(pool.begin(), pool.end());
  std::vector<int> pool_labels;
  for (std::size_t i : pool) pool_labels.push_back(labels[i]);

  const std::vector<Fold> folds = StratifiedKFold(pool_labels, job.kfold, job.split_seed);
  std::map<std::string, std::vector<double>> per_metric;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    auto remap = [&](const std::vector<std::size_t>& local) {
      std::vector<std::size_t> global;
      for (std::size_t i : local) global.push_back(pool[i]);
      return global;
    };
    DataSplits splits{Select(bags, remap(folds[f].train)), Select(bags, remap(folds[f].val)),
                      Select(bags, split.test)};
    FoldSink fold_sink(sink, f);
    TrainingOptions options;
    options.sink = &fold_sink;
    if (!job.output_dir.empty()) options.output_dir = job.output_dir / ("fold_" + std::to_string(f));
    const TrainingResult result = RunTraining(train, model, splits, options);
    for (const char* name : kMetricNames) {
      per_metric[name].push_back(result.best_val_metrics.Get(name));
    }
  }

  OrderedJson summary;
  summary["type"] = "cv_summary";
  summary["k"] = job.kfold;
  OrderedJson metrics;
  Json mean_val = Json::object();
  for (const char* name : kMetricNames) {
    const FoldSummary s = SummarizeFolds(per_metric[name]);
    metrics[name] = {{"mean", s.mean}, {"std", s.stddev}, {"folds", per_metric[name]}};
    mean_val[name] = s.mean;
  }
  summary["metrics"] = metrics;
  sink.Emit(summary);

  OrderedJson final_event;
  final_event["type"] = "final";
  final_event["best_epoch"] = nullptr;
  final_event["best_metric_value"] = mean_val[train.monitored_field()];
  final_event["monitored_metric"] = train.monitored_metric;
  final_event["val"] = mean_val;
  final_event["test"] = nullptr;
  sink.Emit(final_event);
}

std::string TrialName(const TrialContext& ctx) {
  return "s" + std::to_string(ctx.stage_index) + "_t" + std::to_string(ctx.trial_index);
}

void CopyCheckpoint(const fs::path& from, const fs::path& to) {
  fs::create_directories(to);
  for (const char* file : {kCheckpointBlob, kCheckpointManifest}) {
    if (fs::exists(from / file)) {
      fs::copy_file(from / file, to / file, fs::copy_options::overwrite_existing);
    }
  }
}

void RunTuneJob(const JobConfig& job, const TrainConfig& base_train, const ModelConfig& base_model,
                const DataSplits& splits, MetricSink& sink, const RunnerOptions& options) {
  const TuneConfig tune = ResolveTuneConfig(job);
  const bool isolated = !options.trainer_executable.empty() && !job.output_dir.empty();
  std::map<std::pair<std::size_t, std::size_t>, Json> finals;

  TrialRunner runner = [&](const TrainConfig& train, const ModelConfig& model,
                           const TrialContext& ctx) {
    const fs::path dir =
        job.output_dir.empty() ? fs::path() : job.output_dir / "trials" / TrialName(ctx);
    Json final_event;
    if (isolated) {
      JobConfig trial = job;
      trial.job_id = job.job_id + "-" + TrialName(ctx);
      trial.kind = JobKind::kTrain;
      trial.kfold = 0;
      trial.tune = Json::object();
      trial.train_overrides = TrainConfigToJson(train);
      trial.model_overrides = ModelConfigToJson(model);
      trial.output_dir = dir;
      fs::create_directories(dir);
      WriteJsonFileAtomic(dir / "config.json", JobConfigToJson(trial));
      const fs::path log = dir / "trainer.log";
      std::error_code ignored;
      fs::remove(log, ignored);
      const pid_t pid =
          SpawnProcess({options.trainer_executable.string(), (dir / "config.json").string()}, log,
                       /*join_caller_group=*/true);
      const int code = WaitForExit(pid);
      const std::optional<Json> final = ReadFinalEvent(log);
      Require(code == 0 && final.has_value(), ErrorCode::kStageFailure,
              "trial process exited with code " + std::to_string(code) + " (log " +
                  log.string() + ")");
      final_event = *final;
    } else {
      CollectingSink collected;
      TrainingOptions trial_options;
      trial_options.sink = &collected;
      trial_options.output_dir = dir;
      RunTraining(train, model, splits, trial_options);
      final_event = Json::parse(collected.events.back().dump());
    }
    finals[{ctx.stage_index, ctx.trial_index}] = final_event;
    return TrialOutcome{final_event.at("val").at("auroc").get<double>(),
                        final_event.at("epochs_run").get<std::size_t>()};
  };

  const TuneResult result = RunTuning(tune, base_train, base_model, runner,
                                      [&](const TrialRecord& r) { sink.Emit(r.ToEventJson()); });

  // The last stage winner was trained with every locked value.
  const std::size_t last_stage = tune.stages.size() - 1;
  const TrialRecord* winner = nullptr;
  for (const TrialRecord& r : result.trials) {
    if (r.stage_index != last_stage || r.status != TrialStatus::kCompleted) continue;
    if (winner == nullptr || r.val_auroc > winner->val_auroc) winner = &r;
  }
  const Json& winner_final = finals.at({winner->stage_index, winner->trial_index});
  if (!job.output_dir.empty()) {
    CopyCheckpoint(job.output_dir / "trials" /
                       TrialName(TrialContext{winner->stage_index, winner->trial_index}),
                   job.output_dir);
  }

  const TuneOutcome outcome = AnonymizeOutcome(
      job.job_id, std::string(StrategyName(job.strategy)), std::string(TuneMethodName(tune.method)),
      TunableValues(result.best_train, result.best_model), TunableValues(base_train, base_model),
      result.best_metric);
  OrderedJson outcome_event;
  outcome_event["type"] = "tune_outcome";
  outcome_event["outcome"] = outcome.ToJson();
  sink.Emit(outcome_event);

  OrderedJson final_event;
  final_event["type"] = "final";
  final_event["best_epoch"] = winner_final.at("best_epoch");
  final_event["best_metric_value"] = result.best_metric;
  final_event["monitored_metric"] = "val_auroc";
  final_event["trials"] = result.trials.size();
  final_event["best_values"] = DeltaToJson(result.best_values);
  final_event["best_train"] = TrainConfigToJson(result.best_train);
  final_event["best_model"] = ModelConfigToJson(result.best_model);
  final_event["val"] = winner_final.at("val");
  final_event["test"] = winner_final.at("test");
  sink.Emit(final_event);
}

OrderedJson StatusEvent(const JobConfig& job, std::string_view state) {
  OrderedJson event;
  event["type"] = "status";
  event["state"] = state;
  event["job_id"] = job.job_id;
  return event;
}

}  // namespace

int RunJob(const JobConfig& job, MetricSink& sink, const RunnerOptions& options) {
  try {
    job.Validate();
    Require(job.kind != JobKind::kCompare, ErrorCode::kValidation,
            "compare jobs are driven by the orchestrator");
    FeatureStore store = FeatureStore::Open(job.store_dir);
    const ModelConfig model = ResolveModelConfig(job, store.index().feature_dim);
    const TrainConfig train = ResolveTrainConfig(job);
    const std::vector<PatchFeatureBag> bags = LoadCohort(store, job.cohort);
    std::vector<int> labels;
    labels.reserve(bags.size());
    for (const auto& bag : bags) labels.push_back(*bag.label);
    const SplitAssignment split = StratifiedSplit(labels, job.split_seed);
    if (!job.output_dir.empty()) fs::create_directories(job.output_dir);

    OrderedJson running = StatusEvent(job, "running");
    running["kind"] = JobKindName(job.kind);
    running["strategy"] = StrategyName(job.strategy);
    running["split_policy"] = SplitPolicyName(split.policy_applied);
    running["sizes"] = {{"train", split.train.size()},
                        {"val", split.val.size()},
                        {"test", split.test.size()}};
    sink.Emit(running);

    const DataSplits splits{Select(bags, split.train), Select(bags, split.val),
                            Select(bags, split.test)};
    if (job.kind == JobKind::kTune) {
      RunTuneJob(job, train, model, splits, sink, options);
    } else if (job.kfold > 0) {
      RunCrossValidation(job, train, model, bags, labels, split, sink);
    } else {
      TrainingOptions training;
      training.output_dir = job.output_dir;
      training.sink = &sink;
      RunTraining(train, model, splits, training);
    }
    sink.Emit(StatusEvent(job, "completed"));
    return 0;
  } catch (const Error& e) {
    OrderedJson failed = StatusEvent(job, "failed");
    failed["code"] = ErrorCodeName(e.code());
    failed["error"] = e.what();
    sink.Emit(failed);
  } catch (const std::exception& e) {
    OrderedJson failed = StatusEvent(job, "failed");
    failed["code"] = "internal";
    failed["error"] = e.what();
    sink.Emit(failed);
  }
  return 1;
}

int TrainerMain(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: " << (argc > 0 ? argv[0] : "milpilot-trainer") << " <config.json>\n";
    return 2;
  }
  StdoutSink sink;
  JobConfig job;
  try {
    job = JobConfigFromJson(ReadJsonFile(argv[1]));
  } catch (const std::exception& e) {
    OrderedJson failed;
    failed["type"] = "status";
    failed["state"] = "failed";
    failed["error"] = e.what();
    sink.Emit(failed);
    return 1;
  }
  RunnerOptions options;
  options.trainer_executable = CurrentExecutable();
  return RunJob(job, sink, options);
}

std::optional<Json> ReadFinalEvent(const fs::path& log_path) {
  std::ifstream in(log_path);
  if (!in) return std::nullopt;
  std::optional<Json> last;
  const std::string prefix = kTrainerPrefix;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(prefix, 0) != 0) continue;
    Json event = Json::parse(line.substr(prefix.size()), nullptr, false);
    if (!event.is_discarded() && event.value("type", std::string()) == "final") {
      last = std::move(event);
    }
  }
  return last;
}

}  // namespace milpilot
