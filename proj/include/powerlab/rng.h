// Copyright 2026 The Powerlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef POWERLAB_RNG_H_
#define POWERLAB_RNG_H_

#include <array>
#include <cstdint>
#include <limits>

namespace powerlab {

// SplitMix64 step. Advances `state` and returns the next output.
uint64_t SplitMix64(uint64_t& state);

// Mixes a user seed with a stream tag so that one seed can drive several
// independent generators (values, set selection, perturbation, sparsity).
uint64_t DeriveSeed(uint64_t seed, uint64_t stream);

// Portable xoshiro256** generator. The full state is expanded from the
// 64-bit seed with SplitMix64, so a seed names the same sequence on every
// platform. Gaussian draws use the Box-Muller transform and keep
// the second variate of each pair for the next call.
class Rng {
 public:
  using result_type = uint64_t;

  explicit Rng(uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return Next(); }

  uint64_t Next();

  // Uniform integer in [0, bound). bound must be > 0.
  uint64_t Below(uint64_t bound);

  // Uniform double in [0, 1) with 53 random bits.
  double Uniform01();

  // Standard normal variate.
  double Gaussian();

 private:
  std::array<uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stream tags used by the pattern generators.
enum class Stream : uint64_t {
  kValues = 1,
  kSetMembers = 2,
  kSetChoice = 3,
  kPerturb = 4,
  kSparsity = 5,
  kBase = 6,
};

inline Rng StreamRng(uint64_t seed, Stream stream) {
  return Rng(DeriveSeed(seed, static_cast<uint64_t>(stream)));
}

}  // namespace powerlab

#endif  // POWERLAB_RNG_H_
