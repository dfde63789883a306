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

#include <sys/types.h>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "milpilot/jobs/job_config.hpp"
#include "milpilot/json_io.hpp"

namespace milpilot {

enum class JobState { kQueued, kRunning, kCompleted, kFailed, kStopped };

std::string_view JobStateName(JobState state);
JobState ParseJobState(std::string_view name);
bool IsTerminal(JobState state);
// queued -> running -> {completed, failed, stopped}.
bool IsLegalTransition(JobState from, JobState to);

// UTC, ISO 8601 with milliseconds.
std::string NowTimestamp();

struct JobRecord {
  std::string job_id;
  std::string session_id;
  JobKind kind = JobKind::kTrain;
  JobState state = JobState::kQueued;
  Json config = Json::object();
  std::string created_at;
  std::optional<std::string> started_at;
  std::optional<std::string> ended_at;
  std::optional<std::string> error;
  std::vector<std::string> children;
  std::optional<std::string> parent_id;
  // Last "final" event of the run.
  Json result = nullptr;
  // Trial events of a tune job, in arrival order.
  Json trials = Json::array();
  std::size_t parse_warnings = 0;
  pid_t pid = 0;
  bool stop_requested = false;

  // Throws kConflict on an illegal transition; sets timestamps.
  void TransitionTo(JobState next);

  Json ToJson() const;
  static JobRecord FromJson(const Json& json);
};

struct MetricEvent {
  std::string job_id;
  std::size_t epoch = 0;
  std::string split;
  std::optional<std::size_t> fold;
  Json payload = Json::object();

  // Unique per job: "<epoch>/<split>", prefixed with "f<fold>/" in cross-validation.
  std::string key() const;
  Json ToJson() const;
  static MetricEvent FromJson(const Json& json);
};

struct LogCursor {
  std::string job_id;
  std::uint64_t byte_offset = 0;
  std::string partial_line;

  Json ToJson() const;
  static LogCursor FromJson(const Json& json);
};

// Returns the complete lines appended since the cursor and advances it. A
// trailing line without '\n' is buffered in partial_line. Throws kIo when the
// log cannot be read; a missing log yields no lines.
std::vector<std::string> ReadCompleteLines(LogCursor& cursor, const std::filesystem::path& log);

enum class LineKind { kIgnored, kEvent, kMalformed };

struct ParsedLine {
  LineKind kind = LineKind::kIgnored;
  Json event;
  std::string warning;
};

// Lines that start exactly with "[trainer] " carry one JSON object.
ParsedLine ParseTrainerLine(const std::string& line);

struct DeploymentRecord {
  std::string widget_id;
  std::string job_id;
  std::string title;
  std::string description;
  std::string organ;
  std::vector<std::string> tags;
  std::map<std::string, double> performance_summary;
  std::string artifact_path;

  // Never carries architecture fields.
  Json ToJson() const;
  static DeploymentRecord FromJson(const Json& json);
};

// Key fragments that reveal model internals.
inline constexpr const char* kArchitectureKeyFragments[] = {
    "aggregator", "attn", "dropout", "hidden", "head", "lora", "clam", "rank", "feature_dim"};

// Recursively drops object keys containing an architecture fragment.
Json StripArchitectureFields(const Json& value);
bool ContainsArchitectureFields(const Json& value);

}  // namespace milpilot
