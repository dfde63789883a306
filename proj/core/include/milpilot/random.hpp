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
#include <initializer_list>
#include <string_view>
#include <vector>

namespace milpilot {

// SplitMix64 generator. Every stochastic component draws from one of these,
// seeded through DeriveSeed so streams are reproducible across platforms.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t Next();

  // Uniform in [0, 1) with 53 bits of precision.
  double NextDouble();

  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t NextBelow(std::uint64_t bound);

  // Standard normal via Box-Muller (one value per call, no caching).
  double NextGaussian();

  bool NextBernoulli(double p) { return NextDouble() < p; }

 private:
  std::uint64_t state_;
};

std::uint64_t Mix64(std::uint64_t x);

// Substream seed keyed by (root, purpose label, indices...).
std::uint64_t DeriveSeed(std::uint64_t root, std::string_view label,
                         std::initializer_list<std::uint64_t> indices = {});

// In-place Fisher-Yates shuffle driven by rng.
template <typename T>
void Shuffle(std::vector<T>& values, SplitMix64& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.NextBelow(i));
    std::swap(values[i - 1], values[j]);
  }
}

// First n entries of a partial Fisher-Yates shuffle of [0, size).
std::vector<std::size_t> PartialShuffleIndices(std::size_t size, std::size_t n,
                                               SplitMix64& rng);

}  // namespace milpilot
