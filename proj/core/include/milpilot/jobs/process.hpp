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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace milpilot {

// Starts argv[0] with stdout and stderr appended to log_path and stdin from
// /dev/null, leading a new process group unless join_caller_group is set.
// Throws kIo when the spawn fails.
pid_t SpawnProcess(const std::vector<std::string>& argv, const std::filesystem::path& log_path,
                   bool join_caller_group = false);

// Sends SIGTERM to the whole process group led by pid.
void TerminateProcessGroup(pid_t pid);

// Non-blocking reap: the exit code once the child has exited, else nullopt.
// A child killed by signal s reports 128 + s.
std::optional<int> TryReap(pid_t pid);

// Blocking reap with the same exit-code convention.
int WaitForExit(pid_t pid);

// True while pid names a live process; zombies count as exited.
bool ProcessExists(pid_t pid);

// Absolute path of the running executable.
std::filesystem::path CurrentExecutable();

}  // namespace milpilot
