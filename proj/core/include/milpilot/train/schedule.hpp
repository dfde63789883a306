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

#include "milpilot/train/config.hpp"

namespace milpilot {

// clamp(ceil(0.1 * total_epochs), 1, 5)
std::size_t WarmupLength(std::size_t total_epochs);

// Learning rate for a 0-based epoch. Cosine-with-warmup ramps linearly from
// 1% of base_lr over the warmup epochs, then anneals to zero.
double LearningRateAt(ScheduleKind schedule, double base_lr, std::size_t epoch,
                      std::size_t total_epochs);

}  // namespace milpilot
