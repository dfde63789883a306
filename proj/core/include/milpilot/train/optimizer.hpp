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

#include "milpilot/model/params.hpp"
#include "milpilot/train/config.hpp"

namespace milpilot {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First and second moments per tensor; SGD leaves them empty.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kAdamW;
  std::uint64_t step = 0;
  ParamSet<float> first_moment;
  ParamSet<float> second_moment;
};

OptimizerState MakeOptimizerState(OptimizerKind kind);

// Updates every tensor that has a gradient. Throws kNumeric naming the
// offending tensor when a gradient is not finite.
//   adamw: p -= lr * wd * p, then the bias-corrected Adam step
//   adam:  g += wd * p, then the Adam step
//   sgd:   p -= lr * (g + wd * p)
void OptimizerStep(OptimizerState& state, ParamSet<float>& params, const ParamSet<float>& grads,
                   double lr, double weight_decay, const AdamHyper& hyper = {});

}  // namespace milpilot
