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

#include "milpilot/train/checkpoint.hpp"

#include <csignal>
#include <cstring>
#include <system_error>

#include "milpilot/error.hpp"
#include "milpilot/hashing.hpp"
#include "milpilot/json_io.hpp"

namespace milpilot {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFormat = "milpilot-checkpoint/1";

void AppendGroup(const std::string& group, const ParamSet<float>& tensors, std::string& blob,
                 Json& manifest) {
  for (const auto& [name, value] : tensors) {
    const std::size_t bytes = static_cast<std::size_t>(value.size()) * sizeof(float);
    manifest.push_back({{"name", name},
                        {"group", group},
                        {"shape", {value.rows(), value.cols()}},
                        {"dtype", "float32"},
                        {"byte_offset", blob.size()},
                        {"byte_length", bytes}});
    blob.append(reinterpret_cast<const char*>(value.data()), bytes);
  }
}

// Holds SIGTERM and SIGINT until both checkpoint files are in place.
class TerminationBlock {
 public:
  TerminationBlock() {
    sigset_t block;
    sigemptyset(&block);
    sigaddset(&block, SIGTERM);
    sigaddset(&block, SIGINT);
    pthread_sigmask(SIG_BLOCK, &block, &previous_);
  }
  ~TerminationBlock() { pthread_sigmask(SIG_SETMASK, &previous_, nullptr); }
  TerminationBlock(const TerminationBlock&) = delete;
  TerminationBlock& operator=(const TerminationBlock&) = delete;

 private:
  sigset_t previous_;
};

}  // namespace

void SaveCheckpoint(const CheckpointRecord& record, const fs::path& dir) {
  std::string blob;
  Json tensors = Json::array();
  AppendGroup("weights", record.weights, blob, tensors);
  AppendGroup("optimizer.first_moment", record.optimizer.first_moment, blob, tensors);
  AppendGroup("optimizer.second_moment", record.optimizer.second_moment, blob, tensors);

  const Json manifest = {
      {"format", kFormat},
      {"byte_order", "little"},
      {"model_config", ModelConfigToJson(record.model_config)},
      {"best_epoch", record.best_epoch},
      {"best_metric_value", record.best_metric_value},
      {"monitored_metric", record.monitored_metric},
      {"train_config_digest", record.train_config_digest},
      {"optimizer",
       {{"kind", OptimizerName(record.optimizer.kind)}, {"step", record.optimizer.step}}},
      {"blob_file", kCheckpointBlob},
      {"blob_bytes", blob.size()},
      {"blob_sha256", Sha256Hex(blob)},
      {"tensors", tensors},
  };
  const TerminationBlock hold;
  WriteFileAtomic(dir / kCheckpointBlob, blob);
  WriteJsonFileAtomic(dir / kCheckpointManifest, manifest);
}

CheckpointRecord LoadCheckpoint(const fs::path& dir) {
  const fs::path manifest_path = dir / kCheckpointManifest;
  const fs::path blob_path = dir / kCheckpointBlob;
  Require(fs::exists(manifest_path) && fs::exists(blob_path), ErrorCode::kIntegrity,
          "checkpoint missing under " + dir.string());
  const Json manifest = ReadJsonFile(manifest_path);
  const std::string blob = ReadFileBytes(blob_path);

  CheckpointRecord record;
  try {
    Require(manifest.at("format") == kFormat, ErrorCode::kIntegrity,
            "unsupported checkpoint format");
    const auto expected_bytes = manifest.at("blob_bytes").get<std::size_t>();
    Require(blob.size() == expected_bytes, ErrorCode::kIntegrity,
            "checkpoint blob has " + std::to_string(blob.size()) + " bytes, manifest expects " +
                std::to_string(expected_bytes));
    Require(Sha256Hex(blob) == manifest.at("blob_sha256").get<std::string>(),
            ErrorCode::kIntegrity, "checkpoint blob checksum mismatch");

    record.model_config = ModelConfigFromJson(manifest.at("model_config"));
    record.best_epoch = manifest.at("best_epoch").get<std::size_t>();
    record.best_metric_value = manifest.at("best_metric_value").get<double>();
    record.monitored_metric = manifest.at("monitored_metric").get<std::string>();
    record.train_config_digest = manifest.at("train_config_digest").get<std::string>();
    record.optimizer.kind = ParseOptimizer(manifest.at("optimizer").at("kind").get<std::string>());
    record.optimizer.step = manifest.at("optimizer").at("step").get<std::uint64_t>();

    for (const Json& t : manifest.at("tensors")) {
      const auto name = t.at("name").get<std::string>();
      const auto group = t.at("group").get<std::string>();
      const auto shape = t.at("shape").get<std::vector<std::size_t>>();
      const auto offset = t.at("byte_offset").get<std::size_t>();
      const auto length = t.at("byte_length").get<std::size_t>();
      Require(shape.size() == 2 && shape[0] * shape[1] * sizeof(float) == length &&
                  offset + length <= blob.size(),
              ErrorCode::kIntegrity, "tensor " + name + " has an inconsistent extent");
      Matrix<float> value(shape[0], shape[1]);
      std::memcpy(value.data(), blob.data() + offset, length);
      ParamSet<float>* target = nullptr;
      if (group == "weights") target = &record.weights;
      if (group == "optimizer.first_moment") target = &record.optimizer.first_moment;
      if (group == "optimizer.second_moment") target = &record.optimizer.second_moment;
      Require(target != nullptr, ErrorCode::kIntegrity, "unknown tensor group " + group);
      target->emplace(name, std::move(value));
    }
  } catch (const Json::exception& e) {
    Fail(ErrorCode::kIntegrity, std::string("malformed checkpoint manifest: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIntegrity) throw;
    Fail(ErrorCode::kIntegrity, std::string("invalid checkpoint: ") + e.what());
  }

  const auto shapes = ParamShapes(record.model_config);
  Require(shapes.size() == record.weights.size(), ErrorCode::kIntegrity,
          "checkpoint tensor set does not match the model configuration");
  try {
    CheckParamShapes(record.model_config, record.weights);
  } catch (const Error& e) {
    Fail(ErrorCode::kIntegrity, e.what());
  }
  return record;
}

}  // namespace milpilot
