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

#ifndef POWERLAB_METRICS_H_
#define POWERLAB_METRICS_H_

#include <cstdint>

#include "powerlab/matrix.h"

namespace powerlab {

// Mean number of set bits per element. Throws on an empty matrix.
double MeanHammingWeight(const Matrix& m);

// Exact bit-level disagreement between every multiplied operand pair
// (A[i,k], B[k,j]) of A (N x K) times B (K x M).
struct AlignmentCount {
  uint64_t differing_bits = 0;
  uint64_t pairs = 0;  // N * K * M
  int width = 0;

  double alignment() const {
    return 1.0 - static_cast<double>(differing_bits) /
                     (static_cast<double>(pairs) * width);
  }
  friend bool operator==(const AlignmentCount&, const AlignmentCount&) = default;
};

// Counts per bit position instead of enumerating pairs: for column k of A
// with c_a set bits at position b and row k of B with c_b, the pairs that
// disagree at b number c_a*(M - c_b) + (N - c_a)*c_b.
AlignmentCount PairwiseAlignmentCounts(const Matrix& a, const Matrix& b);

inline double MeanPairwiseAlignment(const Matrix& a, const Matrix& b) {
  return PairwiseAlignmentCounts(a, b).alignment();
}

struct MatrixSummary {
  double mean_hamming_weight = 0.0;
  double sparsity_fraction = 0.0;  // -0 counts as zero
  double value_mean = 0.0;         // over finite elements
  double value_std = 0.0;          // population deviation, finite elements
  uint64_t distinct_value_count = 0;  // distinct bit patterns
  uint64_t saturations = 0;
  uint64_t nans = 0;  // NaN patterns present in the matrix
};

MatrixSummary Summarize(const Matrix& m);

}  // namespace powerlab

#endif  // POWERLAB_METRICS_H_
