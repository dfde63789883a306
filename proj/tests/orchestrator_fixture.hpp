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
#include <fstream>
#include <string>

#include "milpilot/orchestrator/orchestrator.hpp"
#include "job_fixture.hpp"
#include "test_support.hpp"

namespace milpilot::testing {

inline OrchestratorConfig ServiceConfig(const std::filesystem::path& root,
                                        const std::filesystem::path& trainer) {
  OrchestratorConfig config;
  config.data_dir = root / "data";
  config.poll_interval = std::chrono::milliseconds(100);
  config.max_concurrent = 4;
  config.trainer_executable = trainer;
  return config;
}

// Executable shell script standing in for the trainer; $1 is the config path.
inline std::filesystem::path WriteScript(const std::filesystem::path& path,
                                         const std::string& body) {
  std::ofstream(path) << "#!/bin/sh\n" << body << "\n";
  std::filesystem::permissions(path, std::filesystem::perms::owner_all);
  return path;
}

inline std::string EpochLine(std::size_t epoch, const std::string& split, double auroc = 0.5) {
  return "[trainer] " + Json{{"type", "epoch"},
                             {"epoch", epoch},
                             {"split", split},
                             {"loss", 0.7},
                             {"auroc", auroc}}
                            .dump();
}

inline std::string FinalLine() {
  return "[trainer] " + Json{{"type", "final"},
                             {"best_epoch", 1},
                             {"best_metric_value", 0.75},
                             {"val", {{"auroc", 0.75}, {"accuracy", 0.7}}},
                             {"test", {{"auroc", 0.7}, {"accuracy", 0.65}}}}
                            .dump();
}

// Shell command that prints line verbatim.
inline std::string Echo(const std::string& line) {
  std::string quoted;
  for (char c : line) quoted += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return "echo '" + quoted + "'";
}

}  // namespace milpilot::testing
