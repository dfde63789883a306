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

#include "milpilot/orchestrator/orchestrator.hpp"

#include <algorithm>
#include <cstdlib>
#include <random>

#include "milpilot/deploy/deploy.hpp"
#include "milpilot/error.hpp"
#include "milpilot/eval/metrics.hpp"
#include "milpilot/hashing.hpp"
#include "milpilot/jobs/process.hpp"
#include "milpilot/store/feature_store.hpp"
#include "milpilot/train/checkpoint.hpp"

namespace milpilot {

namespace fs = std::filesystem;

namespace {

constexpr const char* kJobs = "jobs";
constexpr const char* kMetrics = "metrics";
constexpr const char* kCursors = "cursors";
constexpr const char* kSessions = "sessions";
constexpr const char* kDeployments = "deployments";
constexpr const char* kOutcomes = "outcomes";

int SplitRank(const std::string& split) {
  if (split == "train") return 0;
  if (split == "val") return 1;
  if (split == "test") return 2;
  return 3;
}

// Strategy-specific model sections reach only the matching child.
JobConfig CompareChild(const JobConfig& job, Strategy strategy) {
  JobConfig child = job;
  child.kind = JobKind::kTrain;
  child.strategy = strategy;
  if (strategy != Strategy::kLora) child.model_overrides.erase("lora");
  if (strategy != Strategy::kClam) child.model_overrides.erase("clam");
  return child;
}

std::string Joined(const std::vector<std::string>& items, std::size_t limit) {
  std::string out;
  for (std::size_t i = 0; i < items.size() && i < limit; ++i) {
    out += (i ? ", " : "") + items[i];
  }
  if (items.size() > limit) out += ", ... (" + std::to_string(items.size()) + " total)";
  return out;
}

}  // namespace

// ---- configuration ----

void OrchestratorConfig::ResolveDefaults() {
  if (log_dir.empty()) log_dir = data_dir / "logs";
  if (artifact_dir.empty()) artifact_dir = data_dir / "artifacts";
  if (run_dir.empty()) run_dir = data_dir / "runs";
  if (max_concurrent == 0) {
    max_concurrent = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  }
  if (trainer_executable.empty()) {
    trainer_executable = CurrentExecutable().parent_path() / "milpilot-trainer";
  }
}

Json OrchestratorConfig::ToJson() const {
  return {{"data_dir", data_dir.string()},
          {"log_dir", log_dir.string()},
          {"artifact_dir", artifact_dir.string()},
          {"run_dir", run_dir.string()},
          {"store_dir", store_dir.string()},
          {"poll_interval_ms", poll_interval.count()},
          {"max_concurrent", max_concurrent},
          {"bind", bind},
          {"trainer_executable", trainer_executable.string()},
          {"min_per_class", min_per_class}};
}

OrchestratorConfig OrchestratorConfig::FromJson(const Json& json) {
  OrchestratorConfig c;
  c.data_dir = json.value("data_dir", c.data_dir.string());
  c.log_dir = json.value("log_dir", std::string());
  c.artifact_dir = json.value("artifact_dir", std::string());
  c.run_dir = json.value("run_dir", std::string());
  c.store_dir = json.value("store_dir", std::string());
  c.poll_interval = std::chrono::milliseconds(json.value("poll_interval_ms", 30000));
  c.max_concurrent = json.value("max_concurrent", std::size_t{0});
  c.bind = json.value("bind", c.bind);
  c.token = json.value("token", std::string());
  c.trainer_executable = json.value("trainer_executable", std::string());
  c.min_per_class = json.value("min_per_class", kMinSamplesPerClass);
  return c;
}

void OrchestratorConfig::ApplyEnvironment() {
  auto env = [](const char* name) -> std::optional<std::string> {
    const char* value = std::getenv(name);
    if (value == nullptr || *value == '\0') return std::nullopt;
    return std::string(value);
  };
  if (auto v = env("MILPILOT_DATA_DIR")) data_dir = *v;
  if (auto v = env("MILPILOT_LOG_DIR")) log_dir = *v;
  if (auto v = env("MILPILOT_ARTIFACT_DIR")) artifact_dir = *v;
  if (auto v = env("MILPILOT_RUN_DIR")) run_dir = *v;
  if (auto v = env("MILPILOT_STORE_DIR")) store_dir = *v;
  if (auto v = env("MILPILOT_POLL_INTERVAL_MS")) {
    poll_interval = std::chrono::milliseconds(std::stoll(*v));
  }
  if (auto v = env("MILPILOT_MAX_CONCURRENT")) max_concurrent = std::stoul(*v);
  if (auto v = env("MILPILOT_BIND")) bind = *v;
  if (auto v = env("MILPILOT_TOKEN")) token = *v;
  if (auto v = env("MILPILOT_TRAINER")) trainer_executable = *v;
}

DeployRequest DeployRequest::FromJson(const Json& json) {
  Require(json.is_object(), ErrorCode::kValidation, "deployment request must be an object");
  DeployRequest r;
  try {
    r.job_id = json.at("job_id").get<std::string>();
    r.approved = json.value("approved", Json(nullptr));
    r.title = json.value("title", std::string());
    r.description = json.value("description", std::string());
    r.organ = json.value("organ", std::string());
    r.tags = json.value("tags", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kValidation, std::string("malformed deployment request: ") + e.what());
  }
  return r;
}

// ---- lifecycle ----

Orchestrator::Orchestrator(OrchestratorConfig config)
    : config_([&] {
        config.ResolveDefaults();
        return config;
      }()),
      documents_(config_.data_dir) {
  fs::create_directories(config_.log_dir);
  fs::create_directories(config_.artifact_dir);
  fs::create_directories(config_.run_dir);
  Recover();
}

Orchestrator::~Orchestrator() { StopPoller(); }

void Orchestrator::Recover() {
  for (const Json& doc : documents_.List(kSessions)) {
    sessions_.insert(doc.at("session_id").get<std::string>());
  }
  std::vector<JobRecord> queued;
  for (const Json& doc : documents_.List(kJobs)) {
    JobRecord job = JobRecord::FromJson(doc);
    if (job.state == JobState::kQueued) queued.push_back(job);
    jobs_[job.job_id] = std::move(job);
  }
  std::sort(queued.begin(), queued.end(), [](const JobRecord& a, const JobRecord& b) {
    return a.created_at != b.created_at ? a.created_at < b.created_at : a.job_id < b.job_id;
  });
  for (const JobRecord& job : queued) queue_.push_back(job.job_id);

  for (const Json& doc : documents_.List(kCursors)) {
    LogCursor cursor = LogCursor::FromJson(doc);
    cursors_[cursor.job_id] = std::move(cursor);
  }
  for (const auto& [id, job] : jobs_) {
    if (auto doc = documents_.Get(kMetrics, id)) {
      for (const Json& e : *doc) {
        MetricEvent event = MetricEvent::FromJson(e);
        metrics_[id][event.key()] = std::move(event);
      }
    }
  }
  for (const Json& doc : documents_.List(kDeployments)) {
    DeploymentRecord record = DeploymentRecord::FromJson(doc);
    deployed_jobs_[record.job_id] = record.widget_id;
    deployments_[record.widget_id] = std::move(record);
  }
  for (const Json& doc : documents_.List(kOutcomes)) {
    TuneOutcome outcome = TuneOutcome::FromJson(doc);
    outcomes_[outcome.job_hash] = std::move(outcome);
  }
}

void Orchestrator::StartPoller() {
  std::lock_guard<std::mutex> guard(poller_mutex_);
  if (poller_.joinable()) return;
  poller_stop_ = false;
  poller_ = std::thread([this] {
    std::unique_lock<std::mutex> lock(poller_mutex_);
    while (!poller_stop_) {
      poller_wake_.wait_for(lock, config_.poll_interval, [this] { return poller_stop_; });
      if (poller_stop_) break;
      lock.unlock();
      try {
        PollOnce();
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> state(mutex_);
        warnings_.push_back(std::string("poll cycle failed: ") + e.what());
      }
      lock.lock();
    }
  });
}

void Orchestrator::StopPoller() {
  {
    std::lock_guard<std::mutex> guard(poller_mutex_);
    poller_stop_ = true;
  }
  poller_wake_.notify_all();
  if (poller_.joinable()) poller_.join();
}

// ---- helpers ----

fs::path Orchestrator::LogPath(const std::string& job_id) const {
  return config_.log_dir / (job_id + ".log");
}

fs::path Orchestrator::RunDir(const std::string& job_id) const { return config_.run_dir / job_id; }

std::string Orchestrator::NewId() {
  static thread_local std::mt19937_64 engine{std::random_device{}()};
  std::uniform_int_distribution<std::uint64_t> dist;
  std::uint64_t hi = dist(engine);
  std::uint64_t lo = dist(engine);
  hi = (hi & ~0xF000ULL) | 0x4000ULL;                        // version 4
  lo = (lo & 0x3FFFFFFFFFFFFFFFULL) | 0x8000000000000000ULL;  // RFC 4122 variant
  char out[37];
  std::snprintf(out, sizeof(out), "%08x-%04x-%04x-%04x-%012llx",
                static_cast<unsigned>(hi >> 32), static_cast<unsigned>((hi >> 16) & 0xFFFF),
                static_cast<unsigned>(hi & 0xFFFF), static_cast<unsigned>(lo >> 48),
                static_cast<unsigned long long>(lo & 0xFFFFFFFFFFFFULL));
  return out;
}

JobRecord& Orchestrator::JobOrThrow(const std::string& job_id) {
  auto it = jobs_.find(job_id);
  Require(it != jobs_.end(), ErrorCode::kNotFound, "no job " + job_id);
  return it->second;
}

const JobRecord& Orchestrator::JobOrThrow(const std::string& job_id) const {
  auto it = jobs_.find(job_id);
  Require(it != jobs_.end(), ErrorCode::kNotFound, "no job " + job_id);
  return it->second;
}

void Orchestrator::Persist(const JobRecord& job) { documents_.Put(kJobs, job.job_id, job.ToJson()); }

void Orchestrator::PersistMetrics(const std::string& job_id) {
  Json events = Json::array();
  for (const auto& [key, event] : metrics_[job_id]) events.push_back(event.ToJson());
  documents_.Put(kMetrics, job_id, events);
}

std::size_t Orchestrator::RunningProcesses() const {
  std::size_t n = 0;
  for (const auto& [id, job] : jobs_) {
    if (job.pid > 0) ++n;
  }
  return n;
}

// ---- sessions and jobs ----

std::string Orchestrator::CreateSession() {
  Lock lock(mutex_);
  const std::string id = NewId();
  documents_.Put(kSessions, id, {{"session_id", id}, {"created_at", NowTimestamp()}});
  sessions_.insert(id);
  return id;
}

JobRecord Orchestrator::SubmitJob(const std::string& session_id, JobKind kind,
                                  const Json& config) {
  Lock lock(mutex_);
  Require(sessions_.count(session_id) > 0, ErrorCode::kNotFound, "no session " + session_id);
  Require(config.is_object(), ErrorCode::kValidation, "job config must be a JSON object");

  Json raw = config;
  raw["kind"] = JobKindName(kind);
  if (kind == JobKind::kCompare) raw["strategy"] = "abmil";
  JobConfig job = JobConfigFromJson(raw);
  if (job.store_dir.empty()) job.store_dir = config_.store_dir;
  job.job_id = NewId();
  job.output_dir = RunDir(job.job_id);
  if (kind == JobKind::kCompare) {
    for (Strategy strategy : kCompareStrategies) CompareChild(job, strategy).Validate();
  } else {
    job.Validate();
  }

  // Guardrails run before any record or process exists.
  const RoutingIndex index = RoutingIndex::Load(job.store_dir);
  const ValidationReport report = ValidateFeatures(index, job.cohort, config_.min_per_class);
  if (!report.missing.empty()) {
    std::vector<std::string> names;
    for (const SlideRef& ref : report.missing) names.push_back(ref.ToString());
    Fail(ErrorCode::kGuardrail, "missing features for " + std::to_string(names.size()) +
                                    " slide(s): " + Joined(names, 50));
  }
  if (!report.below_minimum.empty()) {
    std::vector<std::string> names;
    for (const std::string& cls : report.below_minimum) {
      names.push_back("'" + cls + "' (" + std::to_string(report.per_class_counts.at(cls)) + ")");
    }
    Fail(ErrorCode::kGuardrail, "class below " + std::to_string(config_.min_per_class) +
                                    " samples: " + Joined(names, 50));
  }

  JobRecord record;
  record.job_id = job.job_id;
  record.session_id = session_id;
  record.kind = kind;
  record.created_at = NowTimestamp();
  if (kind == JobKind::kCompare) {
    Json shared = JobConfigToJson(job);
    shared.erase("strategy");
    record.config = shared;
    for (Strategy strategy : kCompareStrategies) {
      JobConfig child_config = CompareChild(job, strategy);
      child_config.job_id = NewId();
      child_config.output_dir = RunDir(child_config.job_id);
      JobRecord child;
      child.job_id = child_config.job_id;
      child.session_id = session_id;
      child.kind = JobKind::kTrain;
      child.config = JobConfigToJson(child_config);
      child.created_at = record.created_at;
      child.parent_id = record.job_id;
      record.children.push_back(child.job_id);
      Persist(child);
      queue_.push_back(child.job_id);
      jobs_[child.job_id] = std::move(child);
    }
    record.TransitionTo(JobState::kRunning);
  } else {
    record.config = JobConfigToJson(job);
    queue_.push_back(record.job_id);
  }
  Persist(record);
  const std::string id = record.job_id;
  jobs_[id] = std::move(record);
  LaunchQueued();
  return jobs_.at(id);
}

void Orchestrator::Launch(JobRecord& job) {
  try {
    const fs::path dir = RunDir(job.job_id);
    fs::create_directories(dir);
    const fs::path config_path = dir / "config.json";
    WriteJsonFileAtomic(config_path, job.config);
    std::error_code ec;
    fs::remove(LogPath(job.job_id), ec);
    cursors_[job.job_id] = LogCursor{job.job_id, 0, ""};
    documents_.Put(kCursors, job.job_id, cursors_[job.job_id].ToJson());
    job.pid = SpawnProcess({config_.trainer_executable.string(), config_path.string()},
                           LogPath(job.job_id));
    owned_.insert(job.pid);
    job.TransitionTo(JobState::kRunning);
  } catch (const std::exception& e) {
    job.TransitionTo(JobState::kRunning);
    job.error = std::string("launch failed: ") + e.what();
    job.TransitionTo(JobState::kFailed);
  }
  Persist(job);
}

void Orchestrator::LaunchQueued() {
  while (!queue_.empty() && RunningProcesses() < config_.max_concurrent) {
    const std::string id = queue_.front();
    queue_.pop_front();
    auto it = jobs_.find(id);
    if (it == jobs_.end() || it->second.state != JobState::kQueued) continue;
    Launch(it->second);
  }
}

JobRecord Orchestrator::GetJob(const std::string& job_id) const {
  Lock lock(mutex_);
  return JobOrThrow(job_id);
}

std::vector<JobRecord> Orchestrator::ListJobs(const std::string& session_id) const {
  Lock lock(mutex_);
  std::vector<JobRecord> out;
  for (const auto& [id, job] : jobs_) {
    if (session_id.empty() || job.session_id == session_id) out.push_back(job);
  }
  std::stable_sort(out.begin(), out.end(), [](const JobRecord& a, const JobRecord& b) {
    return a.created_at < b.created_at;
  });
  return out;
}

std::vector<MetricEvent> Orchestrator::Metrics(const std::string& job_id,
                                               std::optional<std::size_t> since_epoch) const {
  Lock lock(mutex_);
  JobOrThrow(job_id);
  std::vector<MetricEvent> out;
  auto it = metrics_.find(job_id);
  if (it == metrics_.end()) return out;
  for (const auto& [key, event] : it->second) {
    if (!since_epoch || event.epoch > *since_epoch) out.push_back(event);
  }
  std::sort(out.begin(), out.end(), [](const MetricEvent& a, const MetricEvent& b) {
    const auto ka = std::make_tuple(a.fold.value_or(0), a.epoch, SplitRank(a.split));
    const auto kb = std::make_tuple(b.fold.value_or(0), b.epoch, SplitRank(b.split));
    return ka < kb;
  });
  return out;
}

// ---- ingestion ----

std::size_t Orchestrator::ApplyEvent(JobRecord& job, const Json& event) {
  const std::string type = event.at("type").get<std::string>();
  if (type == "epoch") {
    MetricEvent metric;
    metric.job_id = job.job_id;
    metric.epoch = event.at("epoch").get<std::size_t>();
    metric.split = event.at("split").get<std::string>();
    if (event.contains("fold")) metric.fold = event.at("fold").get<std::size_t>();
    metric.payload = event;
    auto& events = metrics_[job.job_id];
    const std::string key = metric.key();
    const bool fresh = events.find(key) == events.end();
    events[key] = std::move(metric);
    return fresh ? 1 : 0;
  }
  if (type == "final") {
    job.result = event;
  } else if (type == "status") {
    const std::string state = event.value("state", std::string());
    if (job.state == JobState::kRunning && state == "completed") {
      job.TransitionTo(job.stop_requested ? JobState::kStopped : JobState::kCompleted);
    } else if (job.state == JobState::kRunning && state == "failed") {
      job.error = event.value("error", std::string("trainer reported failure"));
      job.TransitionTo(JobState::kFailed);
    }
  } else if (type == "trial") {
    const auto same = [&](const Json& t) {
      return t.at("stage_index") == event.at("stage_index") &&
             t.at("trial_index") == event.at("trial_index");
    };
    if (std::none_of(job.trials.begin(), job.trials.end(), same)) job.trials.push_back(event);
  } else if (type == "tune_outcome") {
    const TuneOutcome outcome = TuneOutcome::FromJson(event.at("outcome"));
    if (outcomes_.emplace(outcome.job_hash, outcome).second) {
      documents_.Put(kOutcomes, outcome.job_hash, outcome.ToJson());
    }
  }
  return 0;
}

std::size_t Orchestrator::IngestLog(JobRecord& job, bool flush_partial) {
  LogCursor& cursor = cursors_[job.job_id];
  cursor.job_id = job.job_id;
  std::vector<std::string> lines;
  try {
    lines = ReadCompleteLines(cursor, LogPath(job.job_id));
  } catch (const std::exception& e) {
    warnings_.push_back("cannot read log of " + job.job_id + ": " + e.what());
    return 0;
  }
  if (flush_partial && !cursor.partial_line.empty()) {
    lines.push_back(std::move(cursor.partial_line));
    cursor.partial_line.clear();
  }
  if (lines.empty()) return 0;

  std::size_t fresh = 0;
  for (const std::string& line : lines) {
    const ParsedLine parsed = ParseTrainerLine(line);
    if (parsed.kind == LineKind::kMalformed) {
      ++job.parse_warnings;
      warnings_.push_back(job.job_id + ": " + parsed.warning);
    } else if (parsed.kind == LineKind::kEvent) {
      try {
        fresh += ApplyEvent(job, parsed.event);
      } catch (const std::exception& e) {
        ++job.parse_warnings;
        warnings_.push_back(job.job_id + ": bad trainer event: " + e.what());
      }
    }
  }
  // Events first, cursor last: a crash in between replays into idempotent upserts.
  PersistMetrics(job.job_id);
  Persist(job);
  documents_.Put(kCursors, job.job_id, cursor.ToJson());
  return fresh;
}

void Orchestrator::FinishExited(JobRecord& job, std::optional<int> exit_code) {
  owned_.erase(job.pid);
  IngestLog(job, /*flush_partial=*/true);
  if (job.state == JobState::kRunning) {
    if (job.stop_requested) {
      job.TransitionTo(JobState::kStopped);
    } else if (exit_code == 0 && !job.result.is_null()) {
      job.TransitionTo(JobState::kCompleted);
    } else {
      job.error = exit_code && *exit_code >= 0
                      ? "trainer exited with code " + std::to_string(*exit_code)
                      : "trainer process disappeared";
      job.TransitionTo(JobState::kFailed);
    }
  }
  job.pid = 0;
  Persist(job);
}

void Orchestrator::ReapProcesses() {
  for (auto& [id, job] : jobs_) {
    if (job.pid <= 0) continue;
    if (owned_.count(job.pid)) {
      if (const std::optional<int> code = TryReap(job.pid)) FinishExited(job, code);
    } else if (!ProcessExists(job.pid)) {
      // Started by an earlier service instance: no exit status to collect.
      FinishExited(job, std::nullopt);
    }
  }
}

void Orchestrator::SettleCompareJobs() {
  for (auto& [id, job] : jobs_) {
    if (job.kind != JobKind::kCompare || job.state != JobState::kRunning) continue;
    bool all_terminal = true;
    bool any_completed = false;
    for (const std::string& child : job.children) {
      const JobState s = jobs_.at(child).state;
      all_terminal = all_terminal && IsTerminal(s);
      any_completed = any_completed || s == JobState::kCompleted;
    }
    if (!all_terminal) continue;
    if (job.stop_requested) {
      job.TransitionTo(JobState::kStopped);
    } else if (any_completed) {
      job.TransitionTo(JobState::kCompleted);
    } else {
      job.error = "every strategy failed";
      job.TransitionTo(JobState::kFailed);
    }
    Persist(job);
  }
}

std::size_t Orchestrator::PollOnce() {
  Lock lock(mutex_);
  std::size_t fresh = 0;
  for (auto& [id, job] : jobs_) {
    if (job.kind != JobKind::kCompare && (job.state == JobState::kRunning || job.pid > 0)) {
      fresh += IngestLog(job, /*flush_partial=*/false);
    }
  }
  ReapProcesses();
  LaunchQueued();
  SettleCompareJobs();
  return fresh;
}

JobRecord Orchestrator::WaitForTerminal(const std::string& job_id,
                                        std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    PollOnce();
    {
      Lock lock(mutex_);
      const JobRecord& job = JobOrThrow(job_id);
      if (IsTerminal(job.state) && job.pid == 0) return job;
    }
    Require(std::chrono::steady_clock::now() < deadline, ErrorCode::kStageFailure,
            "timed out waiting for job " + job_id);
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

std::vector<std::string> Orchestrator::warnings() const {
  Lock lock(mutex_);
  return warnings_;
}

// ---- stop ----

void Orchestrator::StopLocked(JobRecord& job) {
  job.stop_requested = true;
  if (job.pid > 0) {
    const pid_t pid = job.pid;
    TerminateProcessGroup(pid);
    if (owned_.count(pid)) {
      FinishExited(job, WaitForExit(pid));
    } else {
      for (int i = 0; i < 600 && ProcessExists(pid); ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
      }
      FinishExited(job, std::nullopt);
    }
  } else if (job.state == JobState::kRunning) {
    job.TransitionTo(JobState::kStopped);
  }
  Persist(job);
}

JobRecord Orchestrator::StopJob(const std::string& job_id) {
  Lock lock(mutex_);
  JobRecord& job = JobOrThrow(job_id);
  Require(job.state == JobState::kRunning, ErrorCode::kConflict,
          "job " + job_id + " is " + std::string(JobStateName(job.state)) + ", not running");
  if (job.kind == JobKind::kCompare) {
    job.stop_requested = true;
    for (const std::string& child_id : job.children) {
      JobRecord& child = jobs_.at(child_id);
      child.stop_requested = true;
      if (child.state == JobState::kQueued) {
        // Never launched: passes through running so the state machine holds.
        child.TransitionTo(JobState::kRunning);
        child.TransitionTo(JobState::kStopped);
        Persist(child);
      } else if (child.state == JobState::kRunning) {
        StopLocked(child);
      }
    }
    SettleCompareJobs();
    Persist(job);
  } else {
    StopLocked(job);
  }
  LaunchQueued();
  return job;
}

void Orchestrator::TerminateAll() {
  Lock lock(mutex_);
  queue_.clear();
  for (auto& [id, job] : jobs_) {
    if (job.pid > 0 && job.state == JobState::kRunning) StopLocked(job);
  }
}

// ---- deployment ----

DeploymentRecord Orchestrator::Deploy(const DeployRequest& request) {
  Lock lock(mutex_);
  Require(request.approved.is_boolean() && request.approved.get<bool>(),
          ErrorCode::kApprovalRequired,
          "deployment requires explicit approval (approved must be true)");
  const JobRecord& job = JobOrThrow(request.job_id);
  auto deployed = deployed_jobs_.find(job.job_id);
  Require(deployed == deployed_jobs_.end(), ErrorCode::kConflict,
          "job " + job.job_id + " is already deployed as " +
              (deployed == deployed_jobs_.end() ? std::string() : deployed->second));
  Require(job.state == JobState::kCompleted, ErrorCode::kConflict,
          "job " + job.job_id + " is " + std::string(JobStateName(job.state)) +
              "; only completed jobs deploy");
  Require(job.kind != JobKind::kCompare, ErrorCode::kConflict,
          "compare jobs deploy through one of their children");

  const fs::path path = PackageArtifacts(RunDir(job.job_id), job.job_id, config_.artifact_dir);

  DeploymentRecord record;
  record.widget_id = "widget-" + Sha256Hex(job.job_id).substr(0, 16);
  record.job_id = job.job_id;
  record.title = request.title;
  record.description = request.description;
  record.organ = request.organ;
  record.tags = request.tags;
  record.artifact_path = path.string();
  if (job.result.is_object()) {
    for (const char* split : {"val", "test"}) {
      const Json& m = job.result.value(split, Json(nullptr));
      if (!m.is_object()) continue;
      for (const char* name : kMetricNames) {
        if (m.contains(name) && m.at(name).is_number()) {
          record.performance_summary[std::string(split) + "_" + name] = m.at(name).get<double>();
        }
      }
    }
  }
  documents_.Put(kDeployments, record.widget_id, record.ToJson());
  deployed_jobs_[job.job_id] = record.widget_id;
  deployments_[record.widget_id] = record;
  return record;
}

DeploymentRecord Orchestrator::GetDeployment(const std::string& widget_id) const {
  Lock lock(mutex_);
  auto it = deployments_.find(widget_id);
  Require(it != deployments_.end(), ErrorCode::kNotFound, "no deployment " + widget_id);
  return it->second;
}

std::vector<TuneOutcome> Orchestrator::TuningOutcomes() const {
  Lock lock(mutex_);
  std::vector<TuneOutcome> out;
  for (const auto& [hash, outcome] : outcomes_) out.push_back(outcome);
  return out;
}

Json Orchestrator::Comparison(const std::string& job_id) const {
  Lock lock(mutex_);
  const JobRecord& job = JobOrThrow(job_id);
  Require(job.kind == JobKind::kCompare, ErrorCode::kValidation,
          "job " + job_id + " is not a compare job");
  Json rows = Json::array();
  for (const std::string& child_id : job.children) {
    const JobRecord& child = jobs_.at(child_id);
    const Json& result = child.result;
    Json row = {{"strategy", child.config.value("strategy", std::string())},
                {"job_id", child.job_id},
                {"state", JobStateName(child.state)},
                {"best_epoch", result.is_object() ? result.value("best_epoch", Json(nullptr))
                                                  : Json(nullptr)},
                {"val", result.is_object() ? result.value("val", Json(nullptr)) : Json(nullptr)},
                {"test", result.is_object() ? result.value("test", Json(nullptr)) : Json(nullptr)},
                {"error", child.error ? Json(*child.error) : Json(nullptr)}};
    rows.push_back(std::move(row));
  }
  return {{"job_id", job.job_id}, {"state", JobStateName(job.state)}, {"rows", rows}};
}

}  // namespace milpilot
