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

#include <gtest/gtest.h>

#include <signal.h>

#include <fstream>
#include <functional>
#include <set>
#include <thread>

#include "milpilot/error.hpp"
#include "milpilot/jobs/job_config.hpp"
#include "milpilot/jobs/job_runner.hpp"
#include "milpilot/jobs/process.hpp"
#include "milpilot/train/checkpoint.hpp"
#include "job_fixture.hpp"
#include "test_support.hpp"

namespace milpilot {
namespace {

namespace fs = std::filesystem;
using testing::FastJobJson;
using testing::ReadText;
using testing::SmallTuneJson;
using testing::TempDir;
using testing::WriteTinyStore;

std::vector<Json> OfType(const CollectingSink& sink, const std::string& type) {
  std::vector<Json> out;
  for (const auto& e : sink.events) {
    if (e.value("type", std::string()) == type) out.push_back(Json::parse(e.dump()));
  }
  return out;
}

void ExpectError(ErrorCode code, const std::function<void()>& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected " << ErrorCodeName(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

// ---- config ----

TEST(JobConfig, RoundTripsThroughJson) {
  TempDir tmp;
  const auto store = WriteTinyStore(tmp.path() / "store");
  Json raw = FastJobJson(store, "clam");
  raw["kfold"] = 3;
  raw["job_id"] = "j1";
  const JobConfig config = JobConfigFromJson(raw);
  EXPECT_EQ(config.strategy, Strategy::kClam);
  EXPECT_EQ(config.kfold, 3u);
  const JobConfig again = JobConfigFromJson(JobConfigToJson(config));
  EXPECT_EQ(JobConfigToJson(again), JobConfigToJson(config));
}

TEST(JobConfig, RejectsBadShapes) {
  TempDir tmp;
  const auto store = WriteTinyStore(tmp.path() / "store");
  Json raw = FastJobJson(store);
  raw["kfold"] = 1;
  ExpectError(ErrorCode::kValidation, [&] { JobConfigFromJson(raw).Validate(); });

  raw["kfold"] = 3;
  raw["kind"] = "tune";
  ExpectError(ErrorCode::kValidation, [&] { JobConfigFromJson(raw).Validate(); });

  Json no_store = FastJobJson(store);
  no_store.erase("store_dir");
  ExpectError(ErrorCode::kValidation, [&] { JobConfigFromJson(no_store).Validate(); });

  Json bad_train = FastJobJson(store);
  bad_train["train"]["epochs"] = 0;
  EXPECT_THROW(JobConfigFromJson(bad_train).Validate(), Error);

  ExpectError(ErrorCode::kValidation, [&] { JobConfigFromJson(Json::array()); });
  ExpectError(ErrorCode::kValidation, [&] { ParseJobKind("deploy"); });
}

TEST(JobConfig, IdentityFieldsComeFromJobAndStore) {
  TempDir tmp;
  const auto store = WriteTinyStore(tmp.path() / "store");
  Json raw = FastJobJson(store, "pooling");
  raw["model"]["strategy"] = "clam";
  raw["model"]["feature_dim"] = 99;
  raw["model"]["class_labels"] = {"x", "y"};
  const ModelConfig model = ResolveModelConfig(JobConfigFromJson(raw), 8);
  EXPECT_EQ(model.strategy, Strategy::kPooling);
  EXPECT_EQ(model.feature_dim, 8u);
  EXPECT_EQ(model.class_labels, store.cohort.class_names);
  EXPECT_EQ(model.head.hidden_sizes, std::vector<std::size_t>{6});
}

TEST(JobConfig, TrainOverridesMergeOntoDefaults) {
  TempDir tmp;
  const auto store = WriteTinyStore(tmp.path() / "store");
  const TrainConfig train = ResolveTrainConfig(JobConfigFromJson(FastJobJson(store)));
  EXPECT_EQ(train.epochs, 3u);
  EXPECT_FALSE(train.early_stop.enabled);
  EXPECT_EQ(train.early_stop.patience, TrainConfig{}.early_stop.patience);
  EXPECT_EQ(train.batch_size, TrainConfig{}.batch_size);
}

// ---- processes ----

TEST(Process, CapturesOutputAndExitCode) {
  TempDir tmp;
  const fs::path log = tmp.path() / "out.log";
  const pid_t pid = SpawnProcess({"/bin/sh", "-c", "echo hello; echo oops >&2; exit 3"}, log);
  EXPECT_EQ(WaitForExit(pid), 3);
  EXPECT_EQ(ReadText(log), "hello\noops\n");
}

TEST(Process, SignalDeathReportsShellConvention) {
  TempDir tmp;
  const pid_t pid = SpawnProcess({"/bin/sh", "-c", "kill -TERM $$"}, tmp.path() / "log");
  EXPECT_EQ(WaitForExit(pid), 128 + SIGTERM);
}

TEST(Process, TerminatesWholeGroup) {
  TempDir tmp;
  const fs::path marker = tmp.path() / "grandchild.pid";
  const pid_t pid = SpawnProcess(
      {"/bin/sh", "-c", "sleep 30 & echo $! > " + marker.string() + "; wait"}, tmp.path() / "log");
  for (int i = 0; i < 100 && !fs::exists(marker); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  const pid_t grandchild = std::stoi(ReadText(marker));
  EXPECT_FALSE(TryReap(pid).has_value());
  TerminateProcessGroup(pid);
  EXPECT_EQ(WaitForExit(pid), 128 + SIGTERM);
  for (int i = 0; i < 100 && ProcessExists(grandchild); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  EXPECT_FALSE(ProcessExists(grandchild));
}

TEST(Process, MissingExecutableFails) {
  TempDir tmp;
  bool failed = false;
  try {
    const pid_t pid = SpawnProcess({"/nonexistent/trainer"}, tmp.path() / "log");
    failed = WaitForExit(pid) != 0;
  } catch (const Error&) {
    failed = true;
  }
  EXPECT_TRUE(failed);
}

TEST(Process, AppendsToExistingLog) {
  TempDir tmp;
  const fs::path log = tmp.path() / "log";
  EXPECT_EQ(WaitForExit(SpawnProcess({"/bin/echo", "one"}, log)), 0);
  EXPECT_EQ(WaitForExit(SpawnProcess({"/bin/echo", "two"}, log)), 0);
  EXPECT_EQ(ReadText(log), "one\ntwo\n");
  EXPECT_TRUE(CurrentExecutable().is_absolute());
}

// ---- runner ----

TEST(JobRunner, TrainJobEmitsLifecycleAndCheckpoint) {
  TempDir tmp;
  const auto store = WriteTinyStore(tmp.path() / "store");
  JobConfig job = JobConfigFromJson(FastJobJson(store));
  job.job_id = "train-1";
  job.output_dir = tmp.path() / "run";
  CollectingSink sink;
  EXPECT_EQ(RunJob(job, sink), 0);

  ASSERT_GE(sink.events.size(), 4u);
  EXPECT_EQ(sink.events.front()["type"], "status");
  EXPECT_EQ(sink.events.front()["state"], "running");
  EXPECT_EQ(sink.events.front()["sizes"]["train"].get<std::size_t>() +
                sink.events.front()["sizes"]["val"].get<std::size_t>() +
                sink.events.front()["sizes"]["test"].get<std::size_t>(),
            68u);
  EXPECT_EQ(sink.events.back()["state"], "completed");
  EXPECT_EQ(OfType(sink, "final").size(), 1u);
  // Three epochs, each with train and val metrics at least.
  std::set<std::size_t> epochs;
  for (const Json& e : OfType(sink, "epoch")) epochs.insert(e.at("epoch").get<std::size_t>());
  EXPECT_EQ(epochs.size(), 3u);
  EXPECT_NO_THROW(LoadCheckpoint(job.output_dir));
}

TEST(JobRunner, MissingStoreEndsWithFailedStatus) {
  TempDir tmp;
  const auto store = WriteTinyStore(tmp.path() / "store");
  JobConfig job = JobConfigFromJson(FastJobJson(store));
  job.store_dir = tmp.path() / "nowhere";
  CollectingSink sink;
  EXPECT_EQ(RunJob(job, sink), 1);
  ASSERT_FALSE(sink.events.empty());
  EXPECT_EQ(sink.events.back()["state"], "failed");
  EXPECT_TRUE(sink.events.back().contains("error"));
}

TEST(JobRunner, CompareJobsAreRejected) {
  TempDir tmp;
  const auto store = WriteTinyStore(tmp.path() / "store");
  JobConfig job = JobConfigFromJson(FastJobJson(store));
  job.kind = JobKind::kCompare;
  CollectingSink sink;
  EXPECT_EQ(RunJob(job, sink), 1);
  EXPECT_EQ(sink.events.back()["code"], "validation_error");
}

TEST(JobRunner, CrossValidationTagsFoldsAndSummarizes) {
  TempDir tmp;
  const auto store = WriteTinyStore(tmp.path() / "store");
  Json raw = FastJobJson(store, "pooling", 2);
  raw["kfold"] = 3;
  JobConfig job = JobConfigFromJson(raw);
  CollectingSink sink;
  EXPECT_EQ(RunJob(job, sink), 0);

  const auto folds = OfType(sink, "fold");
  ASSERT_EQ(folds.size(), 3u);
  for (std::size_t f = 0; f < 3; ++f) EXPECT_EQ(folds[f]["fold"], f);
  for (const Json& e : OfType(sink, "epoch")) EXPECT_TRUE(e.contains("fold"));

  const auto summary = OfType(sink, "cv_summary");
  ASSERT_EQ(summary.size(), 1u);
  EXPECT_EQ(summary[0]["k"], 3);
  const Json& auroc = summary[0]["metrics"]["auroc"];
  double mean = 0.0;
  for (const Json& v : auroc["folds"]) mean += v.get<double>() / 3.0;
  EXPECT_NEAR(auroc["mean"].get<double>(), mean, 1e-12);

  const auto final = OfType(sink, "final");
  ASSERT_EQ(final.size(), 1u);
  EXPECT_NEAR(final[0]["val"]["auroc"].get<double>(), mean, 1e-12);
}

TEST(JobRunner, InProcessTuneEmitsTrialsOutcomeAndWinner) {
  TempDir tmp;
  const auto store = WriteTinyStore(tmp.path() / "store");
  Json raw = FastJobJson(store, "abmil", 2);
  raw["kind"] = "tune";
  raw["tune"] = SmallTuneJson();
  JobConfig job = JobConfigFromJson(raw);
  job.job_id = "tune-1";
  job.output_dir = tmp.path() / "run";
  CollectingSink sink;
  ASSERT_EQ(RunJob(job, sink), 0);

  const auto trials = OfType(sink, "trial");
  EXPECT_EQ(trials.size(), 8u);
  const auto outcome = OfType(sink, "tune_outcome");
  ASSERT_EQ(outcome.size(), 1u);
  EXPECT_EQ(outcome[0].dump().find("tune-1"), std::string::npos);
  const auto final = OfType(sink, "final");
  ASSERT_EQ(final.size(), 1u);
  EXPECT_EQ(final[0]["trials"], 8);
  EXPECT_TRUE(final[0]["best_values"].contains("learning_rate"));
  EXPECT_TRUE(final[0]["best_values"].contains("head_dropout"));
  // The winner's checkpoint is promoted to the job directory.
  EXPECT_NO_THROW(LoadCheckpoint(job.output_dir));
}

TEST(JobRunner, IsolatedTrialsRunInTrainerProcesses) {
  TempDir tmp;
  const auto store = WriteTinyStore(tmp.path() / "store");
  Json raw = FastJobJson(store, "pooling", 2);
  raw["kind"] = "tune";
  raw["tune"] = SmallTuneJson();
  raw["tune"]["stages"].erase(1);
  JobConfig job = JobConfigFromJson(raw);
  job.job_id = "tune-iso";
  job.output_dir = tmp.path() / "run";
  RunnerOptions options;
  options.trainer_executable = MILPILOT_TEST_TRAINER;
  CollectingSink sink;
  ASSERT_EQ(RunJob(job, sink, options), 0);
  EXPECT_EQ(OfType(sink, "trial").size(), 4u);
  for (const char* trial : {"s0_t0", "s0_t1", "s0_t2", "s0_t3"}) {
    const fs::path log = job.output_dir / "trials" / trial / "trainer.log";
    ASSERT_TRUE(fs::exists(log)) << trial;
    EXPECT_TRUE(ReadFinalEvent(log).has_value()) << trial;
  }
}

TEST(Trainer, BinaryWritesPrefixedEventLog) {
  TempDir tmp;
  const auto store = WriteTinyStore(tmp.path() / "store");
  Json raw = FastJobJson(store, "clam", 2);
  raw["job_id"] = "bin-1";
  raw["output_dir"] = (tmp.path() / "run").string();
  const fs::path config = tmp.path() / "config.json";
  WriteJsonFileAtomic(config, raw);
  const fs::path log = tmp.path() / "trainer.log";
  EXPECT_EQ(WaitForExit(SpawnProcess({MILPILOT_TEST_TRAINER, config.string()}, log)), 0);

  std::ifstream in(log);
  std::string line;
  std::size_t events = 0;
  while (std::getline(in, line)) {
    ASSERT_EQ(line.rfind(kTrainerPrefix, 0), 0u) << line;
    EXPECT_FALSE(Json::parse(line.substr(10), nullptr, false).is_discarded());
    ++events;
  }
  EXPECT_GT(events, 4u);
  const auto final = ReadFinalEvent(log);
  ASSERT_TRUE(final.has_value());
  EXPECT_EQ((*final)["epochs_run"], 2);
}

TEST(Trainer, BinaryRejectsBadUsageAndConfig) {
  TempDir tmp;
  EXPECT_EQ(WaitForExit(SpawnProcess({MILPILOT_TEST_TRAINER}, tmp.path() / "a.log")), 2);
  std::ofstream(tmp.path() / "bad.json") << "{\"cohort\": 3}";
  const fs::path log = tmp.path() / "b.log";
  EXPECT_EQ(
      WaitForExit(SpawnProcess({MILPILOT_TEST_TRAINER, (tmp.path() / "bad.json").string()}, log)),
      1);
  EXPECT_NE(ReadText(log).find("\"state\":\"failed\""), std::string::npos);
  EXPECT_FALSE(ReadFinalEvent(log).has_value());
  EXPECT_FALSE(ReadFinalEvent(tmp.path() / "absent.log").has_value());
}

}  // namespace
}  // namespace milpilot
