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
#include <span>
#include <string_view>

#include "milpilot/train/config.hpp"

namespace milpilot {

enum class StopDecision { kContinue, kStopPlateau, kStopOverfit };

std::string_view StopDecisionName(StopDecision decision);

// Monitored metric for one epoch on both splits.
struct MonitoredPoint {
  std::size_t epoch = 0;
  double train = 0.0;
  double val = 0.0;
};

// Decision after the last entry of history.
// Plateau: the validation value has not beaten the running best by more than
// improvement_threshold for `patience` epochs. Overfit: train - val exceeded
// overfit_gap for `overfit_consecutive` epochs in a row. Never stops before
// min_epochs.
StopDecision EarlyStopCheck(std::span<const MonitoredPoint> history, const EarlyStopConfig& cfg);

}  // namespace milpilot
