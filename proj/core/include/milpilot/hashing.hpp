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

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace milpilot {

std::uint64_t Fnv1a64(std::string_view data);

// FNV-1a 32-bit, used for shard routing.
std::uint32_t Fnv1a32(std::string_view data);

// Lowercase hex SHA-256 digest.
std::string Sha256Hex(std::string_view data);
std::string Sha256Hex(std::span<const std::uint8_t> data);

}  // namespace milpilot
