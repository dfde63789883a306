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

#include "milpilot/orchestrator/records.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

#include "milpilot/error.hpp"
#include "milpilot/train/trainer.hpp"

namespace milpilot {

namespace fs = std::filesystem;

std::string_view JobStateName(JobState state) {
  switch (state) {
    case JobState::kQueued:
      return "queued";
    case JobState::kRunning:
      return "running";
    case JobState::kCompleted:
      return "completed";
    case JobState::kFailed:
      return "failed";
    case JobState::kStopped:
      return "stopped";
  }
  return "queued";
}

JobState ParseJobState(std::string_view name) {
  for (JobState s : {JobState::kQueued, JobState::kRunning, JobState::kCompleted,
                     JobState::kFailed, JobState::kStopped}) {
    if (JobStateName(s) == name) return s;
  }
  Fail(ErrorCode::kValidation, "unknown job state '" + std::string(name) + "'");
}

bool IsTerminal(JobState state) {
  return state == JobState::kCompleted || state == JobState::kFailed ||
         state == JobState::kStopped;
}

bool IsLegalTransition(JobState from, JobState to) {
  if (from == JobState::kQueued) return to == JobState::kRunning;
  if (from == JobState::kRunning) return IsTerminal(to);
  return false;
}

std::string NowTimestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t seconds = std::chrono::system_clock::to_time_t(now);
  const auto millis =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm utc{};
  gmtime_r(&seconds, &utc);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%S", &utc);
  char out[40];
  std::snprintf(out, sizeof(out), "%s.%03dZ", buffer, static_cast<int>(millis));
  return out;
}

void JobRecord::TransitionTo(JobState next) {
  Require(IsLegalTransition(state, next), ErrorCode::kConflict,
          "job " + job_id + " cannot move from " + std::string(JobStateName(state)) + " to " +
              std::string(JobStateName(next)));
  state = next;
  if (next == JobState::kRunning) started_at = NowTimestamp();
  if (IsTerminal(next)) ended_at = NowTimestamp();
}

namespace {

Json Optional(const std::optional<std::string>& value) {
  return value ? Json(*value) : Json(nullptr);
}

std::optional<std::string> OptionalFrom(const Json& json, const char* key) {
  if (!json.contains(key) || json.at(key).is_null()) return std::nullopt;
  return json.at(key).get<std::string>();
}

}  // namespace

Json JobRecord::ToJson() const {
  return {{"job_id", job_id},
          {"session_id", session_id},
          {"kind", JobKindName(kind)},
          {"state", JobStateName(state)},
          {"config", config},
          {"created_at", created_at},
          {"started_at", Optional(started_at)},
          {"ended_at", Optional(ended_at)},
          {"error", Optional(error)},
          {"children", children},
          {"parent_id", Optional(parent_id)},
          {"result", result},
          {"trials", trials},
          {"parse_warnings", parse_warnings},
          {"pid", pid},
          {"stop_requested", stop_requested}};
}

JobRecord JobRecord::FromJson(const Json& json) {
  JobRecord r;
  r.job_id = json.at("job_id").get<std::string>();
  r.session_id = json.at("session_id").get<std::string>();
  r.kind = ParseJobKind(json.at("kind").get<std::string>());
  r.state = ParseJobState(json.at("state").get<std::string>());
  r.config = json.value("config", Json::object());
  r.created_at = json.value("created_at", std::string());
  r.started_at = OptionalFrom(json, "started_at");
  r.ended_at = OptionalFrom(json, "ended_at");
  r.error = OptionalFrom(json, "error");
  r.children = json.value("children", std::vector<std::string>{});
  r.parent_id = OptionalFrom(json, "parent_id");
  r.result = json.value("result", Json(nullptr));
  r.trials = json.value("trials", Json::array());
  r.parse_warnings = json.value("parse_warnings", std::size_t{0});
  r.pid = json.value("pid", 0);
  r.stop_requested = json.value("stop_requested", false);
  return r;
}

std::string MetricEvent::key() const {
  std::string k = std::to_string(epoch) + "/" + split;
  return fold ? "f" + std::to_string(*fold) + "/" + k : k;
}

Json MetricEvent::ToJson() const {
  Json json = {{"job_id", job_id}, {"epoch", epoch}, {"split", split}};
  if (fold) json["fold"] = *fold;
  json["payload"] = payload;
  return json;
}

MetricEvent MetricEvent::FromJson(const Json& json) {
  MetricEvent e;
  e.job_id = json.at("job_id").get<std::string>();
  e.epoch = json.at("epoch").get<std::size_t>();
  e.split = json.at("split").get<std::string>();
  if (json.contains("fold")) e.fold = json.at("fold").get<std::size_t>();
  e.payload = json.value("payload", Json::object());
  return e;
}

Json LogCursor::ToJson() const {
  return {{"job_id", job_id}, {"byte_offset", byte_offset}, {"partial_line", partial_line}};
}

LogCursor LogCursor::FromJson(const Json& json) {
  LogCursor c;
  c.job_id = json.at("job_id").get<std::string>();
  c.byte_offset = json.at("byte_offset").get<std::uint64_t>();
  c.partial_line = json.value("partial_line", std::string());
  return c;
}

std::vector<std::string> ReadCompleteLines(LogCursor& cursor, const fs::path& log) {
  std::vector<std::string> lines;
  std::error_code ec;
  if (!fs::exists(log, ec)) return lines;
  const std::uint64_t size = fs::file_size(log, ec);
  Require(!ec, ErrorCode::kIo, "cannot stat " + log.string());
  if (size <= cursor.byte_offset) return lines;

  std::ifstream in(log, std::ios::binary);
  Require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + log.string());
  in.seekg(static_cast<std::streamoff>(cursor.byte_offset));
  std::string chunk(size - cursor.byte_offset, '\0');
  in.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
  chunk.resize(static_cast<std::size_t>(in.gcount()));
  cursor.byte_offset += chunk.size();

  std::string buffer = std::move(cursor.partial_line);
  buffer += chunk;
  std::size_t start = 0;
  for (std::size_t nl = buffer.find('\n'); nl != std::string::npos;
       nl = buffer.find('\n', start)) {
    std::string line = buffer.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = nl + 1;
  }
  cursor.partial_line = buffer.substr(start);
  return lines;
}

ParsedLine ParseTrainerLine(const std::string& line) {
  ParsedLine parsed;
  const std::string prefix = kTrainerPrefix;
  if (line.rfind(prefix, 0) != 0) return parsed;
  Json event = Json::parse(line.substr(prefix.size()), nullptr, false);
  if (event.is_discarded() || !event.is_object() || !event.contains("type") ||
      !event.at("type").is_string()) {
    parsed.kind = LineKind::kMalformed;
    parsed.warning = "malformed trainer line: " + line.substr(0, 200);
    return parsed;
  }
  parsed.kind = LineKind::kEvent;
  parsed.event = std::move(event);
  return parsed;
}

namespace {

bool IsArchitectureKey(const std::string& key) {
  for (const char* fragment : kArchitectureKeyFragments) {
    if (key.find(fragment) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

Json StripArchitectureFields(const Json& value) {
  if (value.is_object()) {
    Json out = Json::object();
    for (const auto& [key, child] : value.items()) {
      if (!IsArchitectureKey(key)) out[key] = StripArchitectureFields(child);
    }
    return out;
  }
  if (value.is_array()) {
    Json out = Json::array();
    for (const Json& child : value) out.push_back(StripArchitectureFields(child));
    return out;
  }
  return value;
}

bool ContainsArchitectureFields(const Json& value) {
  if (value.is_object()) {
    for (const auto& [key, child] : value.items()) {
      if (IsArchitectureKey(key) || ContainsArchitectureFields(child)) return true;
    }
  } else if (value.is_array()) {
    for (const Json& child : value) {
      if (ContainsArchitectureFields(child)) return true;
    }
  }
  return false;
}

Json DeploymentRecord::ToJson() const {
  Json summary = Json::object();
  for (const auto& [name, v] : performance_summary) summary[name] = v;
  return StripArchitectureFields({{"widget_id", widget_id},
                                  {"job_id", job_id},
                                  {"title", title},
                                  {"description", description},
                                  {"organ", organ},
                                  {"tags", tags},
                                  {"performance_summary", summary},
                                  {"artifact_path", artifact_path}});
}

DeploymentRecord DeploymentRecord::FromJson(const Json& json) {
  DeploymentRecord r;
  r.widget_id = json.at("widget_id").get<std::string>();
  r.job_id = json.at("job_id").get<std::string>();
  r.title = json.value("title", std::string());
  r.description = json.value("description", std::string());
  r.organ = json.value("organ", std::string());
  r.tags = json.value("tags", std::vector<std::string>{});
  const Json summary = json.value("performance_summary", Json::object());
  for (const auto& [name, v] : summary.items()) {
    r.performance_summary[name] = v.is_number() ? v.get<double>() : std::nan("");
  }
  r.artifact_path = json.value("artifact_path", std::string());
  return r;
}

}  // namespace milpilot
