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

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "milpilot/orchestrator/document_store.hpp"
#include "milpilot/orchestrator/records.hpp"
#include "milpilot/tune/tuner.hpp"

namespace milpilot {

struct OrchestratorConfig {
  // Job, metric, cursor, session, deployment and outcome documents.
  std::filesystem::path data_dir = "milpilot-data";
  // Empty directories default to subdirectories of data_dir.
  std::filesystem::path log_dir;
  std::filesystem::path artifact_dir;
  std::filesystem::path run_dir;
  // Feature store used when a job config names none.
  std::filesystem::path store_dir;
  std::chrono::milliseconds poll_interval{30000};
  std::size_t max_concurrent = 0;  // 0 = logical CPU count
  std::string bind = "127.0.0.1:8080";
  // Bearer token for mutating endpoints; empty disables the check.
  std::string token;
  // Defaults to milpilot-trainer next to the running executable.
  std::filesystem::path trainer_executable;
  std::size_t min_per_class = kMinSamplesPerClass;

  void ResolveDefaults();
  Json ToJson() const;
  static OrchestratorConfig FromJson(const Json& json);
  // Overrides fields from MILPILOT_* environment variables.
  void ApplyEnvironment();
};

struct DeployRequest {
  std::string job_id;
  // Must be the JSON literal true.
  Json approved = nullptr;
  std::string title;
  std::string description;
  std::string organ;
  std::vector<std::string> tags;

  static DeployRequest FromJson(const Json& json);
};

inline constexpr Strategy kCompareStrategies[] = {Strategy::kPooling, Strategy::kAbmil,
                                                  Strategy::kClam, Strategy::kLora};

// Job service: guardrails, trainer processes, log ingestion, deployment.
// Every public method is safe to call from concurrent threads.
class Orchestrator {
 public:
  // Reloads persisted documents and resumes cursors of jobs left running.
  explicit Orchestrator(OrchestratorConfig config);
  ~Orchestrator();

  Orchestrator(const Orchestrator&) = delete;
  Orchestrator& operator=(const Orchestrator&) = delete;

  const OrchestratorConfig& config() const { return config_; }

  std::string CreateSession();

  // Throws kNotFound for an unknown session, kValidation/kConfiguration for a
  // bad config and kGuardrail for missing features or small classes.
  JobRecord SubmitJob(const std::string& session_id, JobKind kind, const Json& config);

  JobRecord GetJob(const std::string& job_id) const;
  // All jobs when session_id is empty, else the session's jobs; by creation time.
  std::vector<JobRecord> ListJobs(const std::string& session_id = {}) const;
  // Events with epoch > since_epoch when given.
  std::vector<MetricEvent> Metrics(const std::string& job_id,
                                   std::optional<std::size_t> since_epoch = std::nullopt) const;

  // Terminates the trainer and waits for it. Throws kConflict unless running.
  JobRecord StopJob(const std::string& job_id);

  // Throws kApprovalRequired unless approved is true, kConflict for a job that
  // is not completed or already deployed, kIntegrity without a checkpoint.
  DeploymentRecord Deploy(const DeployRequest& request);
  DeploymentRecord GetDeployment(const std::string& widget_id) const;

  std::vector<TuneOutcome> TuningOutcomes() const;

  // Rows keyed by strategy; compare jobs only.
  Json Comparison(const std::string& job_id) const;

  // One ingestion cycle: read logs, reap trainers, launch queued jobs, settle
  // compare jobs. Returns the number of new metric events.
  std::size_t PollOnce();

  void StartPoller();
  void StopPoller();

  // Polls until the job is terminal; throws kStageFailure on timeout.
  JobRecord WaitForTerminal(const std::string& job_id, std::chrono::milliseconds timeout);

  // Stops every running trainer.
  void TerminateAll();

  std::vector<std::string> warnings() const;

  std::filesystem::path LogPath(const std::string& job_id) const;
  std::filesystem::path RunDir(const std::string& job_id) const;

 private:
  using Lock = std::unique_lock<std::mutex>;

  void Recover();
  JobRecord& JobOrThrow(const std::string& job_id);
  const JobRecord& JobOrThrow(const std::string& job_id) const;
  void Persist(const JobRecord& job);
  void PersistMetrics(const std::string& job_id);
  std::string NewId();

  std::size_t IngestLog(JobRecord& job, bool flush_partial);
  std::size_t ApplyEvent(JobRecord& job, const Json& event);
  void ReapProcesses();
  void FinishExited(JobRecord& job, std::optional<int> exit_code);
  void LaunchQueued();
  void Launch(JobRecord& job);
  void SettleCompareJobs();
  void StopLocked(JobRecord& job);
  std::size_t RunningProcesses() const;

  OrchestratorConfig config_;
  DocumentStore documents_;
  mutable std::mutex mutex_;

  std::set<std::string> sessions_;
  std::map<std::string, JobRecord> jobs_;
  std::map<std::string, std::map<std::string, MetricEvent>> metrics_;
  std::map<std::string, LogCursor> cursors_;
  std::deque<std::string> queue_;
  std::set<pid_t> owned_;
  std::map<std::string, DeploymentRecord> deployments_;
  std::map<std::string, std::string> deployed_jobs_;
  std::map<std::string, TuneOutcome> outcomes_;
  std::vector<std::string> warnings_;

  std::thread poller_;
  std::mutex poller_mutex_;
  std::condition_variable poller_wake_;
  bool poller_stop_ = false;
};

}  // namespace milpilot
