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

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "milpilot/json_io.hpp"
#include "milpilot/store/types.hpp"

namespace milpilot {

enum class Strategy { kPooling, kAbmil, kClam, kLora };
enum class AggregatorKind { kMean, kMax, kMeanMax, kAbmil };

inline constexpr Strategy kAllStrategies[] = {Strategy::kPooling, Strategy::kAbmil,
                                              Strategy::kClam, Strategy::kLora};

std::string_view StrategyName(Strategy strategy);
Strategy ParseStrategy(std::string_view name);
std::string_view AggregatorName(AggregatorKind kind);
AggregatorKind ParseAggregator(std::string_view name);

struct AggregatorSpec {
  AggregatorKind kind = AggregatorKind::kAbmil;
  std::size_t attn_dim = 128;
  double attn_dropout = 0.25;

  std::size_t OutputDim(std::size_t feature_dim) const {
    return kind == AggregatorKind::kMeanMax ? 2 * feature_dim : feature_dim;
  }
};

struct HeadSpec {
  std::vector<std::size_t> hidden_sizes{128};
  double dropout = 0.5;
};

struct ClamSpec {
  std::size_t k = 8;
  double instance_weight = 0.3;
};

struct LoraSpec {
  std::size_t rank = 8;
  double alpha = 16.0;
  bool target_attention = false;
  // Base tensors that stay trainable next to the adapters. The output layer is
  // unfrozen by default: a transferred model rarely shares its label set.
  std::vector<std::string> unfrozen{"head.out.weight", "head.out.bias"};

  double scale() const { return alpha / static_cast<double>(rank); }
};

struct ModelConfig {
  Strategy strategy = Strategy::kAbmil;
  std::vector<std::string> class_labels;
  std::size_t feature_dim = kDefaultFeatureDim;
  AggregatorSpec aggregator;
  HeadSpec head;
  std::optional<ClamSpec> clam;
  std::optional<LoraSpec> lora;

  std::size_t num_classes() const { return class_labels.size(); }
  bool uses_attention() const { return aggregator.kind == AggregatorKind::kAbmil; }

  // Throws kConfiguration on any inconsistency.
  void Validate() const;

  // Strategy defaults: pooling uses mean pooling, lora wraps an ABMIL model.
  static ModelConfig Default(Strategy strategy, std::vector<std::string> class_labels,
                             std::size_t feature_dim = kDefaultFeatureDim);

  friend bool operator==(const ModelConfig&, const ModelConfig&);
};

Json ModelConfigToJson(const ModelConfig& config);
ModelConfig ModelConfigFromJson(const Json& json);

}  // namespace milpilot
