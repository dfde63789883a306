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
#include <string>

#include <nlohmann/json.hpp>

namespace milpilot {

using Json = nlohmann::json;

Json ReadJsonFile(const std::filesystem::path& path);

// Writes via a sibling temp file and rename, so readers never see a torn file.
void WriteJsonFileAtomic(const std::filesystem::path& path, const Json& value,
                         int indent = 2);

void WriteFileAtomic(const std::filesystem::path& path, std::string_view bytes);

std::string ReadFileBytes(const std::filesystem::path& path);

}  // namespace milpilot
