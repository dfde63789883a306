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

#include "milpilot/jobs/job_config.hpp"
#include "milpilot/train/trainer.hpp"

namespace milpilot {

struct RunnerOptions {
  // Trainer binary used for tuning trials; empty runs trials in this process.
  std::filesystem::path trainer_executable;
};

// Runs a train or tune job, emitting status, epoch, fold, trial and final
// events. Returns the process exit code; failures end with a failed status event.
int RunJob(const JobConfig& job, MetricSink& sink, const RunnerOptions& options = {});

// Entry point of the trainer binary: `<exe> <config.json>`.
int TrainerMain(int argc, char** argv);

// Reads the last "[trainer] " final event of a log; nullopt when absent.
std::optional<Json> ReadFinalEvent(const std::filesystem::path& log_path);

}  // namespace milpilot
