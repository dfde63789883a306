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

#include "milpilot/model/config.hpp"

#include "milpilot/error.hpp"

namespace milpilot {

std::string_view StrategyName(Strategy strategy) {
  switch (strategy) {
    case Strategy::kPooling: return "pooling";
    case Strategy::kAbmil: return "abmil";
    case Strategy::kClam: return "clam";
    case Strategy::kLora: return "lora";
  }
  return "unknown";
}

Strategy ParseStrategy(std::string_view name) {
  for (Strategy s : kAllStrategies) {
    if (StrategyName(s) == name) return s;
  }
  Fail(ErrorCode::kConfiguration, "unknown strategy '" + std::string(name) + "'");
}

std::string_view AggregatorName(AggregatorKind kind) {
  switch (kind) {
    case AggregatorKind::kMean: return "mean";
    case AggregatorKind::kMax: return "max";
    case AggregatorKind::kMeanMax: return "meanmax";
    case AggregatorKind::kAbmil: return "abmil";
  }
  return "unknown";
}

AggregatorKind ParseAggregator(std::string_view name) {
  for (AggregatorKind k : {AggregatorKind::kMean, AggregatorKind::kMax,
                           AggregatorKind::kMeanMax, AggregatorKind::kAbmil}) {
    if (AggregatorName(k) == name) return k;
  }
  Fail(ErrorCode::kConfiguration, "unknown aggregator '" + std::string(name) + "'");
}

void ModelConfig::Validate() const {
  auto require = [](bool ok, const std::string& message) {
    Require(ok, ErrorCode::kConfiguration, message);
  };
  require(class_labels.size() >= 2, "a model needs at least two class labels");
  require(feature_dim >= 1, "feature_dim must be >= 1");
  require(aggregator.attn_dim >= 1, "attn_dim must be >= 1");
  require(aggregator.attn_dropout >= 0.0 && aggregator.attn_dropout < 1.0,
          "attn_dropout must lie in [0, 1)");
  require(head.dropout >= 0.0 && head.dropout < 1.0, "head dropout must lie in [0, 1)");
  for (std::size_t h : head.hidden_sizes) require(h >= 1, "hidden sizes must be >= 1");

  switch (strategy) {
    case Strategy::kPooling:
      require(!uses_attention(), "pooling strategy needs a mean, max or meanmax aggregator");
      break;
    case Strategy::kAbmil:
      require(uses_attention(), "abmil strategy needs the abmil aggregator");
      break;
    case Strategy::kClam:
      require(uses_attention(), "clam strategy needs the abmil aggregator");
      require(clam.has_value(), "clam strategy needs clam options");
      break;
    case Strategy::kLora:
      require(lora.has_value(), "lora strategy needs lora options");
      break;
  }
  if (clam) {
    require(strategy == Strategy::kClam, "clam options given for a non-clam strategy");
    require(clam->k >= 1, "clam k must be >= 1");
    require(clam->instance_weight >= 0.0 && clam->instance_weight <= 1.0,
            "clam instance_weight must lie in [0, 1]");
  }
  if (lora) {
    require(strategy == Strategy::kLora, "lora options given for a non-lora strategy");
    require(lora->rank >= 1, "lora rank must be >= 1");
    require(!lora->target_attention || uses_attention(),
            "lora target_attention needs the abmil aggregator");
    require(!head.hidden_sizes.empty() || lora->target_attention,
            "lora needs at least one adapted layer (a hidden head layer or attention)");
  }
}

ModelConfig ModelConfig::Default(Strategy strategy, std::vector<std::string> class_labels,
                                 std::size_t feature_dim) {
  ModelConfig config;
  config.strategy = strategy;
  config.class_labels = std::move(class_labels);
  config.feature_dim = feature_dim;
  if (strategy == Strategy::kPooling) config.aggregator.kind = AggregatorKind::kMean;
  if (strategy == Strategy::kClam) config.clam = ClamSpec{};
  if (strategy == Strategy::kLora) config.lora = LoraSpec{};
  return config;
}

bool operator==(const ModelConfig& a, const ModelConfig& b) {
  return ModelConfigToJson(a) == ModelConfigToJson(b);
}

Json ModelConfigToJson(const ModelConfig& config) {
  Json json = {
      {"strategy", StrategyName(config.strategy)},
      {"class_labels", config.class_labels},
      {"feature_dim", config.feature_dim},
      {"aggregator",
       {{"kind", AggregatorName(config.aggregator.kind)},
        {"attn_dim", config.aggregator.attn_dim},
        {"attn_dropout", config.aggregator.attn_dropout}}},
      {"head", {{"hidden_sizes", config.head.hidden_sizes}, {"dropout", config.head.dropout}}},
      {"clam", nullptr},
      {"lora", nullptr},
  };
  if (config.clam) {
    json["clam"] = {{"k", config.clam->k}, {"instance_weight", config.clam->instance_weight}};
  }
  if (config.lora) {
    json["lora"] = {{"rank", config.lora->rank},
                    {"alpha", config.lora->alpha},
                    {"target_attention", config.lora->target_attention},
                    {"unfrozen", config.lora->unfrozen}};
  }
  return json;
}

ModelConfig ModelConfigFromJson(const Json& json) {
  ModelConfig config;
  try {
    config.strategy = ParseStrategy(json.at("strategy").get<std::string>());
    config = ModelConfig::Default(config.strategy,
                                  json.value("class_labels", std::vector<std::string>{}),
                                  json.value("feature_dim", kDefaultFeatureDim));
    if (json.contains("aggregator")) {
      const Json& a = json["aggregator"];
      if (a.contains("kind")) config.aggregator.kind = ParseAggregator(a["kind"].get<std::string>());
      config.aggregator.attn_dim = a.value("attn_dim", config.aggregator.attn_dim);
      config.aggregator.attn_dropout = a.value("attn_dropout", config.aggregator.attn_dropout);
    }
    if (json.contains("head")) {
      const Json& h = json["head"];
      config.head.hidden_sizes = h.value("hidden_sizes", config.head.hidden_sizes);
      config.head.dropout = h.value("dropout", config.head.dropout);
    }
    if (json.contains("clam") && !json["clam"].is_null()) {
      const Json& c = json["clam"];
      ClamSpec clam;
      clam.k = c.value("k", clam.k);
      clam.instance_weight = c.value("instance_weight", clam.instance_weight);
      config.clam = clam;
    }
    if (json.contains("lora") && !json["lora"].is_null()) {
      const Json& l = json["lora"];
      LoraSpec lora;
      lora.rank = l.value("rank", lora.rank);
      lora.alpha = l.value("alpha", lora.alpha);
      lora.target_attention = l.value("target_attention", lora.target_attention);
      lora.unfrozen = l.value("unfrozen", lora.unfrozen);
      config.lora = lora;
    }
  } catch (const Json::exception& e) {
    Fail(ErrorCode::kConfiguration, std::string("malformed model config: ") + e.what());
  }
  config.Validate();
  return config;
}

}  // namespace milpilot
