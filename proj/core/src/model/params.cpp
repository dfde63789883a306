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

#include "milpilot/model/params.hpp"

#include <algorithm>
#include <cmath>

#include "milpilot/error.hpp"
#include "milpilot/random.hpp"

namespace milpilot {

namespace names {
std::string HeadHidden(std::size_t layer) { return "head.fc" + std::to_string(layer); }
std::string Instance(std::size_t cls) { return "instance." + std::to_string(cls); }
}  // namespace names

std::vector<LinearLayerShape> LinearLayers(const ModelConfig& config) {
  std::vector<LinearLayerShape> layers;
  const std::size_t dim = config.feature_dim;
  if (config.uses_attention()) {
    layers.push_back({names::kAttentionProj, config.aggregator.attn_dim, dim});
    layers.push_back({names::kAttentionScore, 1, config.aggregator.attn_dim});
  }
  std::size_t in = config.aggregator.OutputDim(dim);
  for (std::size_t i = 0; i < config.head.hidden_sizes.size(); ++i) {
    layers.push_back({names::HeadHidden(i), config.head.hidden_sizes[i], in});
    in = config.head.hidden_sizes[i];
  }
  layers.push_back({names::kHeadOut, config.num_classes(), in});
  if (config.strategy == Strategy::kClam) {
    for (std::size_t c = 0; c < config.num_classes(); ++c) {
      layers.push_back({names::Instance(c), 2, dim});
    }
  }
  return layers;
}

std::vector<LinearLayerShape> AdaptedLayers(const ModelConfig& config) {
  std::vector<LinearLayerShape> adapted;
  if (!config.lora) return adapted;
  for (const auto& layer : LinearLayers(config)) {
    const bool is_hidden = layer.name.rfind("head.fc", 0) == 0;
    const bool is_proj = layer.name == names::kAttentionProj && config.lora->target_attention;
    if (!is_hidden && !is_proj) continue;
    Require(config.lora->rank <= std::min(layer.out, layer.in), ErrorCode::kConfiguration,
            "lora rank " + std::to_string(config.lora->rank) + " exceeds the dimensions of " +
                layer.name + " (" + std::to_string(layer.out) + "x" +
                std::to_string(layer.in) + ")");
    adapted.push_back(layer);
  }
  return adapted;
}

std::map<std::string, TensorShape> ParamShapes(const ModelConfig& config) {
  std::map<std::string, TensorShape> shapes;
  for (const auto& layer : LinearLayers(config)) {
    shapes[names::Weight(layer.name)] = {layer.out, layer.in};
    shapes[names::Bias(layer.name)] = {layer.out, 1};
  }
  for (const auto& layer : AdaptedLayers(config)) {
    shapes[names::LoraA(layer.name)] = {config.lora->rank, layer.in};
    shapes[names::LoraB(layer.name)] = {layer.out, config.lora->rank};
  }
  return shapes;
}

std::vector<std::string> TrainableNames(const ModelConfig& config) {
  std::vector<std::string> trainable;
  const auto shapes = ParamShapes(config);
  if (!config.lora) {
    for (const auto& [name, shape] : shapes) trainable.push_back(name);
    return trainable;
  }
  for (const auto& layer : AdaptedLayers(config)) {
    trainable.push_back(names::LoraA(layer.name));
    trainable.push_back(names::LoraB(layer.name));
  }
  for (const auto& name : config.lora->unfrozen) {
    Require(shapes.count(name) > 0, ErrorCode::kConfiguration,
            "lora unfrozen tensor '" + name + "' does not exist in this model");
    trainable.push_back(name);
  }
  std::sort(trainable.begin(), trainable.end());
  trainable.erase(std::unique(trainable.begin(), trainable.end()), trainable.end());
  return trainable;
}

std::size_t LoraParameterCount(std::size_t out, std::size_t in, std::size_t rank) {
  return rank * in + out * rank;
}

namespace {

template <typename Real>
Matrix<Real> GlorotUniform(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix<Real> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<Real>((2.0 * rng.NextDouble() - 1.0) * limit);
  }
  return m;
}

}  // namespace

template <typename Real>
ParamSet<Real> InitParams(const ModelConfig& config, std::uint64_t seed) {
  config.Validate();
  ParamSet<Real> params;
  for (const auto& [name, shape] : ParamShapes(config)) {
    const bool is_bias = name.size() > 5 && name.compare(name.size() - 5, 5, ".bias") == 0;
    const bool is_lora_b = name.size() > 7 && name.compare(name.size() - 7, 7, ".lora_b") == 0;
    // Zero score weights start attention uniform over real patches.
    const bool is_score = name == names::Weight(names::kAttentionScore);
    if (is_bias || is_lora_b || is_score) {
      params.emplace(name, Matrix<Real>::Zero(shape.rows, shape.cols));
    } else {
      params.emplace(name, GlorotUniform<Real>(shape.rows, shape.cols,
                                               DeriveSeed(seed, "init/" + name)));
    }
  }
  return params;
}

template <typename Real>
void CheckParamShapes(const ModelConfig& config, const ParamSet<Real>& params) {
  for (const auto& [name, shape] : ParamShapes(config)) {
    auto it = params.find(name);
    Require(it != params.end(), ErrorCode::kShape, "missing tensor " + name);
    Require(static_cast<std::size_t>(it->second.rows()) == shape.rows &&
                static_cast<std::size_t>(it->second.cols()) == shape.cols,
            ErrorCode::kShape,
            "tensor " + name + " has shape " + std::to_string(it->second.rows()) + "x" +
                std::to_string(it->second.cols()) + ", expected " + std::to_string(shape.rows) +
                "x" + std::to_string(shape.cols));
  }
}

template <typename Real>
ParamSet<Real> ApplyLora(const ModelConfig& config, const ParamSet<Real>& params) {
  Require(config.lora.has_value(), ErrorCode::kConfiguration, "model has no lora options");
  ParamSet<Real> view;
  for (const auto& [name, value] : params) {
    const bool adapter = name.find(".lora_") != std::string::npos;
    if (!adapter) view.emplace(name, value);
  }
  const Real scale = static_cast<Real>(config.lora->scale());
  for (const auto& layer : AdaptedLayers(config)) {
    const auto& a = params.at(names::LoraA(layer.name));
    const auto& b = params.at(names::LoraB(layer.name));
    view.at(names::Weight(layer.name)).noalias() += scale * (b * a);
  }
  return view;
}

template ParamSet<float> InitParams<float>(const ModelConfig&, std::uint64_t);
template ParamSet<double> InitParams<double>(const ModelConfig&, std::uint64_t);
template void CheckParamShapes<float>(const ModelConfig&, const ParamSet<float>&);
template void CheckParamShapes<double>(const ModelConfig&, const ParamSet<double>&);
template ParamSet<float> ApplyLora<float>(const ModelConfig&, const ParamSet<float>&);
template ParamSet<double> ApplyLora<double>(const ModelConfig&, const ParamSet<double>&);

}  // namespace milpilot
