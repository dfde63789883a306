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

#include "milpilot/train/optimizer.hpp"

#include <cmath>

#include "milpilot/error.hpp"

namespace milpilot {

OptimizerState MakeOptimizerState(OptimizerKind kind) {
  OptimizerState state;
  state.kind = kind;
  return state;
}

void OptimizerStep(OptimizerState& state, ParamSet<float>& params, const ParamSet<float>& grads,
                   double lr, double weight_decay, const AdamHyper& hyper) {
  for (const auto& [name, grad] : grads) {
    Require(grad.allFinite(), ErrorCode::kNumeric, "non-finite gradient in tensor " + name);
    auto it = params.find(name);
    Require(it != params.end() && it->second.rows() == grad.rows() &&
                it->second.cols() == grad.cols(),
            ErrorCode::kShape, "gradient " + name + " does not match any parameter");
  }
  ++state.step;
  const auto flr = static_cast<float>(lr);
  const auto fwd = static_cast<float>(weight_decay);

  if (state.kind == OptimizerKind::kSgd) {
    for (const auto& [name, grad] : grads) {
      Matrix<float>& p = params.at(name);
      p -= flr * (grad + fwd * p);
    }
    return;
  }

  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  const auto b1 = static_cast<float>(hyper.beta1);
  const auto b2 = static_cast<float>(hyper.beta2);
  const auto eps = static_cast<float>(hyper.eps);
  const auto step_size = static_cast<float>(lr / bc1);
  const auto inv_sqrt_bc2 = static_cast<float>(1.0 / std::sqrt(bc2));

  for (const auto& [name, grad_in] : grads) {
    Matrix<float>& p = params.at(name);
    auto [m_it, m_new] = state.first_moment.try_emplace(name, Matrix<float>::Zero(p.rows(), p.cols()));
    auto [v_it, v_new] = state.second_moment.try_emplace(name, Matrix<float>::Zero(p.rows(), p.cols()));
    Matrix<float>& m = m_it->second;
    Matrix<float>& v = v_it->second;

    Matrix<float> grad = grad_in;
    if (state.kind == OptimizerKind::kAdam) {
      grad += fwd * p;
    } else {
      p *= 1.0f - flr * fwd;
    }
    m = b1 * m + (1.0f - b1) * grad;
    v = b2 * v + (1.0f - b2) * grad.cwiseProduct(grad);
    p.array() -= step_size * m.array() / (v.array().sqrt() * inv_sqrt_bc2 + eps);
  }
}

}  // namespace milpilot
