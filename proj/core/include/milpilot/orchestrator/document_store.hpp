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
#include <optional>
#include <string>
#include <vector>

#include "milpilot/json_io.hpp"

namespace milpilot {

// One JSON file per document at `<root>/<collection>/<id>.json`, replaced by
// atomic rename. Not synchronized; callers serialize access.
class DocumentStore {
 public:
  explicit DocumentStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  void Put(const std::string& collection, const std::string& id, const Json& document);
  std::optional<Json> Get(const std::string& collection, const std::string& id) const;
  // Documents ordered by id; unreadable files are skipped.
  std::vector<Json> List(const std::string& collection) const;
  bool Remove(const std::string& collection, const std::string& id);

 private:
  std::filesystem::path PathFor(const std::string& collection, const std::string& id) const;

  std::filesystem::path root_;
};

}  // namespace milpilot
