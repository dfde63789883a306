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
#include <optional>
#include <vector>

#include "milpilot/model/params.hpp"
#include "milpilot/store/collate.hpp"

namespace milpilot {

enum class Mode { kTrain, kEval };

namespace detail {

// Activations of one bag kept for the backward pass.
template <typename Real>
struct BagActivations {
  Matrix<Real> features;                 // P x D
  Matrix<Real> attn_hidden;              // P x A, tanh output
  Matrix<Real> attn_keep;                // P x A, dropout scale (0 or 1/keep)
  Vector<Real> attention;                // P
  std::vector<std::size_t> argmax;       // max pooling winners per feature
  Vector<Real> slide;                    // aggregated representation
  std::vector<Vector<Real>> head_inputs;  // input of every head layer
  std::vector<Vector<Real>> head_pre;     // pre-activation of hidden layers
  std::vector<Vector<Real>> head_keep;    // dropout scale per hidden layer
};

}  // namespace detail

template <typename Real>
struct ForwardResult {
  Matrix<Real> logits;                  // B x C
  Matrix<Real> probs;                   // B x C
  Matrix<Real> slide_vectors;           // B x aggregator output dim
  std::optional<Matrix<Real>> attention;  // B x Pmax, zero on padding
  std::vector<detail::BagActivations<Real>> cache;
};

template <typename Real>
ForwardResult<Real> Forward(const ParamSet<Real>& params, const ModelConfig& config,
                            const Batch& batch, Mode mode, std::uint64_t dropout_seed);

struct LossConfig {
  double label_smoothing = 0.1;
};

template <typename Real>
struct LossResult {
  Real loss = 0;
  Real bag_loss = 0;
  Real instance_loss = 0;
  ParamSet<Real> grads;  // trainable tensors only
  Matrix<Real> probs;
};

template <typename Real>
LossResult<Real> LossAndGrads(const ParamSet<Real>& params, const ModelConfig& config,
                              const Batch& batch, const LossConfig& loss_config, Mode mode,
                              std::uint64_t dropout_seed);

// Loss only; same value LossAndGrads reports.
template <typename Real>
LossResult<Real> ComputeLoss(const ParamSet<Real>& params, const ModelConfig& config,
                             const Batch& batch, const LossConfig& loss_config, Mode mode,
                             std::uint64_t dropout_seed);

}  // namespace milpilot
