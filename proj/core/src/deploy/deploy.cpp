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

#include "milpilot/deploy/deploy.hpp"

#include "milpilot/error.hpp"
#include "milpilot/model/mil_model.hpp"
#include "milpilot/train/checkpoint.hpp"

namespace milpilot {

namespace fs = std::filesystem;

fs::path ArtifactPath(const fs::path& artifact_root, const std::string& job_id) {
  Require(!job_id.empty() && job_id != "." && job_id != ".." &&
              job_id.find('/') == std::string::npos && job_id.find('\\') == std::string::npos,
          ErrorCode::kValidation, "invalid job id for an artifact path: '" + job_id + "'");
  return artifact_root / job_id;
}

fs::path PackageArtifacts(const fs::path& checkpoint_dir, const std::string& job_id,
                          const fs::path& artifact_root) {
  const fs::path target = ArtifactPath(artifact_root, job_id);
  // Loading verifies the checksum and tensor shapes before anything is copied.
  const CheckpointRecord record = LoadCheckpoint(checkpoint_dir);
  fs::create_directories(target);
  WriteFileAtomic(target / kModelConfigFile, ModelConfigToJson(record.model_config).dump(2) + "\n");
  WriteFileAtomic(target / kCheckpointBlob, ReadFileBytes(checkpoint_dir / kCheckpointBlob));
  WriteFileAtomic(target / kCheckpointManifest,
                  ReadFileBytes(checkpoint_dir / kCheckpointManifest));
  return target;
}

LoadedModel LoadModel(const fs::path& artifact_dir) {
  const fs::path config_path = artifact_dir / kModelConfigFile;
  Require(fs::exists(config_path), ErrorCode::kIntegrity,
          "artifact lacks " + std::string(kModelConfigFile) + ": " + artifact_dir.string());
  LoadedModel model;
  try {
    model.config = ModelConfigFromJson(ReadJsonFile(config_path));
    model.config.Validate();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kIntegrity, std::string("unreadable model config: ") + e.what());
  } catch (const Error& e) {
    Fail(ErrorCode::kIntegrity, std::string("invalid model config: ") + e.what());
  }
  CheckpointRecord record = LoadCheckpoint(artifact_dir);
  try {
    CheckParamShapes(model.config, record.weights);
  } catch (const Error& e) {
    Fail(ErrorCode::kIntegrity, std::string("weights do not match model config: ") + e.what());
  }
  model.weights = std::move(record.weights);
  return model;
}

Json InferenceResult::ToJson() const {
  Json probs = Json::object();
  for (const auto& [label, p] : probabilities) probs[label] = p;
  Json json = {{"probabilities", probs}, {"predicted_label", predicted_label}};
  json["attention"] = attention ? Json(*attention) : Json(nullptr);
  return json;
}

InferenceResult Predict(const LoadedModel& model, const PatchFeatureBag& bag) {
  Require(bag.feature_dim == model.config.feature_dim, ErrorCode::kDimensionMismatch,
          "bag has feature_dim " + std::to_string(bag.feature_dim) + ", model expects " +
              std::to_string(model.config.feature_dim));
  Require(bag.patch_count() > 0, ErrorCode::kEmptyBatch, "bag has no patches");
  PatchFeatureBag unlabeled = bag;
  unlabeled.label.reset();
  const PatchFeatureBag* one[] = {&unlabeled};
  const Batch batch = Collate(std::span<const PatchFeatureBag* const>(one, 1));
  const auto forward = Forward<float>(model.weights, model.config, batch, Mode::kEval, 0);

  InferenceResult result;
  std::size_t best = 0;
  for (std::size_t c = 0; c < model.config.num_classes(); ++c) {
    const double p = forward.probs(0, static_cast<Eigen::Index>(c));
    result.probabilities[model.config.class_labels[c]] = p;
    if (p > forward.probs(0, static_cast<Eigen::Index>(best))) best = c;
  }
  result.predicted_label = model.config.class_labels[best];
  if (forward.attention) {
    std::vector<double> weights(bag.patch_count());
    for (std::size_t p = 0; p < weights.size(); ++p) {
      weights[p] = (*forward.attention)(0, static_cast<Eigen::Index>(p));
    }
    result.attention = std::move(weights);
  }
  return result;
}

}  // namespace milpilot
