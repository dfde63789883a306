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
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "milpilot/model/config.hpp"

namespace milpilot {

template <typename Real>
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Real>
using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

// Named tensors; every tensor is stored as a 2-D matrix (biases are n x 1).
template <typename Real>
using ParamSet = std::map<std::string, Matrix<Real>>;

namespace names {
inline constexpr const char* kAttentionProj = "attention.proj";
inline constexpr const char* kAttentionScore = "attention.score";
inline constexpr const char* kHeadOut = "head.out";
std::string HeadHidden(std::size_t layer);
std::string Instance(std::size_t cls);
inline std::string Weight(const std::string& layer) { return layer + ".weight"; }
inline std::string Bias(const std::string& layer) { return layer + ".bias"; }
inline std::string LoraA(const std::string& layer) { return layer + ".lora_a"; }
inline std::string LoraB(const std::string& layer) { return layer + ".lora_b"; }
}  // namespace names

struct LinearLayerShape {
  std::string name;
  std::size_t out = 0;
  std::size_t in = 0;
};

// Base linear layers in forward order (attention, head, instance classifiers).
std::vector<LinearLayerShape> LinearLayers(const ModelConfig& config);

// Layers that carry a LoRA adapter pair; empty unless strategy is lora.
std::vector<LinearLayerShape> AdaptedLayers(const ModelConfig& config);

struct TensorShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

// Every tensor name the config implies, with its shape.
std::map<std::string, TensorShape> ParamShapes(const ModelConfig& config);

// Tensors that receive gradients: all of them, except under lora where only
// adapters and LoraSpec::unfrozen are trained.
std::vector<std::string> TrainableNames(const ModelConfig& config);

std::size_t LoraParameterCount(std::size_t out, std::size_t in, std::size_t rank);

// Glorot-uniform weights, zero biases, zero LoRA B. One substream per tensor name.
template <typename Real>
ParamSet<Real> InitParams(const ModelConfig& config, std::uint64_t seed);

// Params with each adapted weight replaced by W + (alpha / rank) * B * A.
// Adapter tensors are dropped from the view.
template <typename Real>
ParamSet<Real> ApplyLora(const ModelConfig& config, const ParamSet<Real>& params);

// Throws kShape if a tensor is missing or mis-shaped.
template <typename Real>
void CheckParamShapes(const ModelConfig& config, const ParamSet<Real>& params);

template <typename To, typename From>
ParamSet<To> CastParams(const ParamSet<From>& params) {
  ParamSet<To> out;
  for (const auto& [name, value] : params) out.emplace(name, value.template cast<To>());
  return out;
}

}  // namespace milpilot
