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

#include "milpilot/random.hpp"

#include <cmath>
#include <numbers>

#include "milpilot/hashing.hpp"

namespace milpilot {

std::uint64_t Mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t SplitMix64::Next() {
  state_ += 0x9e3779b97f4a7c15ULL;
  return Mix64(state_);
}

double SplitMix64::NextDouble() {
  return static_cast<double>(Next() >> 11) * 0x1.0p-53;
}

std::uint64_t SplitMix64::NextBelow(std::uint64_t bound) {
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % bound);
  std::uint64_t value = Next();
  while (value >= limit) value = Next();
  return value % bound;
}

double SplitMix64::NextGaussian() {
  double u1 = NextDouble();
  while (u1 <= 0.0) u1 = NextDouble();
  const double u2 = NextDouble();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t DeriveSeed(std::uint64_t root, std::string_view label,
                         std::initializer_list<std::uint64_t> indices) {
  std::uint64_t state = Mix64(root ^ 0x6a09e667f3bcc909ULL);
  state = Mix64(state ^ Fnv1a64(label));
  for (std::uint64_t index : indices) {
    state = Mix64(state ^ (index + 0x9e3779b97f4a7c15ULL));
  }
  return state;
}

std::vector<std::size_t> PartialShuffleIndices(std::size_t size, std::size_t n,
                                               SplitMix64& rng) {
  std::vector<std::size_t> indices(size);
  for (std::size_t i = 0; i < size; ++i) indices[i] = i;
  if (n > size) n = size;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.NextBelow(size - i));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(n);
  return indices;
}

}  // namespace milpilot
