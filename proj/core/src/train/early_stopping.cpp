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

#include "milpilot/train/early_stopping.hpp"

namespace milpilot {

std::string_view StopDecisionName(StopDecision decision) {
  switch (decision) {
    case StopDecision::kContinue: return "continue";
    case StopDecision::kStopPlateau: return "stop_plateau";
    case StopDecision::kStopOverfit: return "stop_overfit";
  }
  return "unknown";
}

StopDecision EarlyStopCheck(std::span<const MonitoredPoint> history, const EarlyStopConfig& cfg) {
  if (!cfg.enabled || history.empty()) return StopDecision::kContinue;
  if (history.back().epoch < cfg.min_epochs) return StopDecision::kContinue;

  // The running best always tracks the maximum; only a jump of more than the
  // threshold over it resets the patience counter.
  double best = history.front().val;
  std::size_t since_improvement = 0;
  std::size_t gap_run = 0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const MonitoredPoint& point = history[i];
    if (i > 0) {
      if (point.val > best + cfg.improvement_threshold) {
        since_improvement = 0;
      } else {
        ++since_improvement;
      }
      if (point.val > best) best = point.val;
    }
    gap_run = (point.train - point.val > cfg.overfit_gap) ? gap_run + 1 : 0;
  }
  if (gap_run >= cfg.overfit_consecutive) return StopDecision::kStopOverfit;
  if (since_improvement >= cfg.patience) return StopDecision::kStopPlateau;
  return StopDecision::kContinue;
}

}  // namespace milpilot
