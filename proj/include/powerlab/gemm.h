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

// Reference GEMM, D = alpha * A.B + beta * C, and a switching-activity model
// of the multiply-accumulate datapath.
//
// Every product is rounded to the accumulator format and added to the
// running sum in strictly ascending k, so results are bit-reproducible:
//
//   FP32   binary32 operands, binary32 products and accumulation
//   FP16   binary16 operands, binary16 products and accumulation
//   FP16T  binary16 operands, exact products summed in binary32, result
//          converted back to binary16 (tensor-core style MMA)
//   INT8   8-bit operands, products summed in a 32-bit integer
//
// Binary16 arithmetic overflows to infinity like IEEE hardware; only the
// final binary32 -> binary16 conversion of FP16T saturates.

#ifndef POWERLAB_GEMM_H_
#define POWERLAB_GEMM_H_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "powerlab/matrix.h"

namespace powerlab {

enum class Precision { kBinary32, kBinary16, kInt8, kInt32 };
std::string_view PrecisionName(Precision p);

struct ArithmeticPolicy {
  Precision multiply = Precision::kBinary32;  // operand format
  Precision accumulate = Precision::kBinary32;

  static ArithmeticPolicy For(DType dtype);
  int accumulator_width() const;
  // Throws unless this is one of the four supported combinations and the
  // operand format matches `dtype`.
  void CheckCompatible(DType dtype) const;

  friend bool operator==(const ArithmeticPolicy&,
                         const ArithmeticPolicy&) = default;
};

struct GemmProblem {
  const Matrix& a;            // N x K
  const Matrix& b;            // K x M
  const Matrix* c = nullptr;  // N x M; absent means zero
  double alpha = 1.0;
  double beta = 0.0;
};

struct GemmResult {
  Matrix d;
  // Final accumulator value per output element (row-major), before alpha,
  // beta and the output conversion.
  std::vector<double> accumulators;
  ConversionStats stats;
};

// Throws on dimension/dtype mismatch and on INT32 accumulator overflow.
GemmResult Gemm(const GemmProblem& problem, const ArithmeticPolicy& policy);

// Bit transitions seen by one modeled MAC lane per output element. A lane
// receives A[i,0..K) and B[0..K,j) on two operand buses and produces the
// partial sum after each step on the accumulator bus; every bus counts the
// Hamming distance between consecutive values. Lanes are visited row-major
// over outputs with k ascending, and a lane starts with no prior bus value,
// so a constant stream contributes nothing.
struct ToggleReport {
  uint64_t operand_a_toggles = 0;
  uint64_t operand_b_toggles = 0;
  uint64_t accumulator_toggles = 0;

  size_t tile_rows = 0;  // output tile shape
  size_t tile_cols = 0;
  size_t tiles_down = 0;
  size_t tiles_across = 0;
  std::vector<uint64_t> tile_totals;  // row-major over tiles

  uint64_t operand_toggles() const { return operand_a_toggles + operand_b_toggles; }
  uint64_t total_toggles() const { return operand_toggles() + accumulator_toggles; }
};

struct SwitchingOptions {
  size_t tile_rows = 16;
  size_t tile_cols = 16;
  unsigned threads = 0;  // 0: hardware concurrency
};

ToggleReport SwitchingActivity(const Matrix& a, const Matrix& b,
                               const ArithmeticPolicy& policy,
                               const SwitchingOptions& options = {});

// One pass that produces both the GEMM result (alpha = 1, beta = 0) and
// the toggle report; used by the experiment runner.
struct SimulationResult {
  GemmResult gemm;
  ToggleReport toggles;
};
SimulationResult Simulate(const Matrix& a, const Matrix& b,
                          const ArithmeticPolicy& policy,
                          const SwitchingOptions& options = {});

}  // namespace powerlab

#endif  // POWERLAB_GEMM_H_
