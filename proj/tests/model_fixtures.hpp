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
#include <vector>

#include "milpilot/model/mil_model.hpp"
#include "milpilot/random.hpp"
#include "test_support.hpp"

namespace milpilot::testing {

// Small models for exhaustive gradient and invariance checks.
inline ModelConfig TinyConfig(Strategy strategy, std::size_t classes,
                              AggregatorKind pooling = AggregatorKind::kMean) {
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < classes; ++c) labels.push_back("c" + std::to_string(c));
  ModelConfig config = ModelConfig::Default(strategy, labels, 8);
  if (strategy == Strategy::kPooling) config.aggregator.kind = pooling;
  config.aggregator.attn_dim = 4;
  config.aggregator.attn_dropout = 0.25;
  config.head.hidden_sizes = {5};
  config.head.dropout = 0.3;
  if (config.clam) config.clam->k = 2;
  if (config.lora) {
    config.lora->rank = 2;
    config.lora->alpha = 4.0;  // scale 2, as with the rank-8 / alpha-16 default
    config.lora->target_attention = true;
  }
  config.Validate();
  return config;
}

// Every tensor filled with non-trivial values (LoRA B included).
template <typename Real>
ParamSet<Real> RandomParams(const ModelConfig& config, std::uint64_t seed, double scale = 0.5) {
  ParamSet<Real> params = InitParams<Real>(config, seed);
  SplitMix64 rng(seed ^ 0x5eedULL);
  for (auto& [name, tensor] : params) {
    for (Eigen::Index i = 0; i < tensor.size(); ++i) {
      tensor.data()[i] = static_cast<Real>(scale * rng.NextGaussian());
    }
  }
  return params;
}

inline std::vector<PatchFeatureBag> RandomBags(std::size_t count, std::size_t dim,
                                               std::size_t min_p, std::size_t max_p,
                                               std::size_t classes, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<PatchFeatureBag> bags;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t patches = min_p + rng.NextBelow(max_p - min_p + 1);
    bags.push_back(RandomBag(patches, dim, rng.Next(), static_cast<int>(i % classes),
                             "case-" + std::to_string(i)));
  }
  return bags;
}

}  // namespace milpilot::testing
