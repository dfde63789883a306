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

#include "milpilot/train/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace milpilot {

std::size_t WarmupLength(std::size_t total_epochs) {
  const auto tenth = static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(total_epochs)));
  return std::clamp<std::size_t>(tenth, 1, 5);
}

namespace {

double Cosine(double base_lr, double progress) {
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace

double LearningRateAt(ScheduleKind schedule, double base_lr, std::size_t epoch,
                      std::size_t total_epochs) {
  const double e = static_cast<double>(epoch);
  const double total = static_cast<double>(std::max<std::size_t>(total_epochs, 1));
  switch (schedule) {
    case ScheduleKind::kConstant:
      return base_lr;
    case ScheduleKind::kStep: {
      const auto drops = static_cast<int>(std::floor(3.0 * e / total));
      return base_lr * std::pow(0.1, drops);
    }
    case ScheduleKind::kCosine:
      return total_epochs <= 1 ? base_lr : Cosine(base_lr, e / (total - 1.0));
    case ScheduleKind::kCosineWarmup: {
      const std::size_t warmup = WarmupLength(total_epochs);
      if (epoch < warmup) {
        const double start = 0.01 * base_lr;
        return start + (base_lr - start) * e / static_cast<double>(warmup);
      }
      if (total_epochs <= warmup) return base_lr;
      // The final epoch lands on the end of the annealing curve.
      const std::size_t decay_span = total_epochs - 1 - warmup;
      if (decay_span == 0) return Cosine(base_lr, 1.0);
      return Cosine(base_lr, (e - static_cast<double>(warmup)) / static_cast<double>(decay_span));
    }
  }
  return base_lr;
}

}  // namespace milpilot
