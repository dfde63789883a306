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

#include "milpilot/orchestrator/document_store.hpp"

#include <algorithm>

#include "milpilot/error.hpp"

namespace milpilot {

namespace fs = std::filesystem;

namespace {

void CheckName(const std::string& name) {
  Require(!name.empty() && name != "." && name != ".." &&
              name.find_first_of("/\\") == std::string::npos,
          ErrorCode::kValidation, "invalid document name '" + name + "'");
}

}  // namespace

DocumentStore::DocumentStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_);
}

fs::path DocumentStore::PathFor(const std::string& collection, const std::string& id) const {
  CheckName(collection);
  CheckName(id);
  return root_ / collection / (id + ".json");
}

void DocumentStore::Put(const std::string& collection, const std::string& id,
                        const Json& document) {
  const fs::path path = PathFor(collection, id);
  fs::create_directories(path.parent_path());
  WriteJsonFileAtomic(path, document);
}

std::optional<Json> DocumentStore::Get(const std::string& collection,
                                       const std::string& id) const {
  const fs::path path = PathFor(collection, id);
  if (!fs::exists(path)) return std::nullopt;
  return ReadJsonFile(path);
}

std::vector<Json> DocumentStore::List(const std::string& collection) const {
  CheckName(collection);
  std::vector<fs::path> files;
  const fs::path dir = root_ / collection;
  if (!fs::exists(dir)) return {};
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Json> documents;
  for (const fs::path& file : files) {
    try {
      documents.push_back(ReadJsonFile(file));
    } catch (const std::exception&) {
      // A torn temp file never carries the .json name, so this is foreign data.
    }
  }
  return documents;
}

bool DocumentStore::Remove(const std::string& collection, const std::string& id) {
  std::error_code ec;
  return fs::remove(PathFor(collection, id), ec);
}

}  // namespace milpilot
