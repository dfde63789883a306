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

#include <benchmark/benchmark.h>

#include <vector>

#include "milpilot/eval/metrics.hpp"
#include "milpilot/random.hpp"

namespace milpilot {
namespace {

void BM_BinaryAuroc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  SplitMix64 rng(3);
  std::vector<double> scores(n);
  std::vector<int> positive(n);
  for (std::size_t i = 0; i < n; ++i) {
    positive[i] = static_cast<int>(rng.NextBelow(2));
    scores[i] = rng.NextDouble() + 0.2 * positive[i];
  }
  for (auto _ : state) benchmark::DoNotOptimize(BinaryAuroc(scores, positive));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BinaryAuroc)->RangeMultiplier(8)->Range(64, 1 << 18)->Complexity();

void BM_ComputeMetrics(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  SplitMix64 rng(4);
  ProbMatrix probs(n, 3);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double total = 0.0;
    for (Eigen::Index c = 0; c < 3; ++c) total += probs(i, c) = rng.NextDouble() + 1e-3;
    probs.row(i) /= total;
    labels[static_cast<std::size_t>(i)] = static_cast<int>(i % 3);
  }
  for (auto _ : state) benchmark::DoNotOptimize(ComputeMetrics(probs, labels).auroc);
}
BENCHMARK(BM_ComputeMetrics)->Arg(300)->Arg(30000);

}  // namespace
}  // namespace milpilot
