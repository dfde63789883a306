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

#include "milpilot/model/mil_model.hpp"
#include "milpilot/store/collate.hpp"
#include "milpilot/store/synthetic.hpp"

namespace milpilot {
namespace {

std::vector<PatchFeatureBag> Bags(std::size_t count, std::size_t patches) {
  SyntheticSpec spec;
  spec.cases_per_class = {count / 2, count - count / 2};
  spec.patches_min = patches;
  spec.patches_max = patches;
  spec.seed = 5;
  return GenerateSynthetic(spec);
}

void BM_Forward(benchmark::State& state, Strategy strategy) {
  const auto bags = Bags(4, static_cast<std::size_t>(state.range(0)));
  const Batch batch = Collate(bags);
  const ModelConfig config = ModelConfig::Default(strategy, {"a", "b"});
  const auto params = InitParams<float>(config, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Forward(params, config, batch, Mode::kEval, 0).probs);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(bags.size()));
}
BENCHMARK_CAPTURE(BM_Forward, pooling, Strategy::kPooling)->Arg(64)->Arg(512);
BENCHMARK_CAPTURE(BM_Forward, abmil, Strategy::kAbmil)->Arg(64)->Arg(512);
BENCHMARK_CAPTURE(BM_Forward, clam, Strategy::kClam)->Arg(64)->Arg(512);
BENCHMARK_CAPTURE(BM_Forward, lora, Strategy::kLora)->Arg(64)->Arg(512);

void BM_LossAndGrads(benchmark::State& state) {
  const auto bags = Bags(4, static_cast<std::size_t>(state.range(0)));
  const Batch batch = Collate(bags);
  const ModelConfig config = ModelConfig::Default(Strategy::kAbmil, {"a", "b"});
  const auto params = InitParams<float>(config, 1);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        LossAndGrads(params, config, batch, LossConfig{}, Mode::kTrain, ++seed).loss);
  }
}
BENCHMARK(BM_LossAndGrads)->Arg(64)->Arg(512);

void BM_Collate(benchmark::State& state) {
  SyntheticSpec spec;
  spec.cases_per_class = {8, 8};
  spec.seed = 9;
  const auto bags = GenerateSynthetic(spec);
  for (auto _ : state) benchmark::DoNotOptimize(Collate(bags).data.data());
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(bags.size()));
}
BENCHMARK(BM_Collate);

}  // namespace
}  // namespace milpilot
