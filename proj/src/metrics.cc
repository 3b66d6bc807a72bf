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

#include "powerlab/metrics.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_set>
#include <vector>

namespace powerlab {

double MeanHammingWeight(const Matrix& m) {
  if (m.empty()) throw Error("hamming weight of an empty matrix");
  uint64_t total = 0;
  for (uint32_t v : m.data()) total += std::popcount(v);
  return static_cast<double>(total) / static_cast<double>(m.size());
}

AlignmentCount PairwiseAlignmentCounts(const Matrix& a, const Matrix& b) {
  if (a.dtype() != b.dtype()) throw Error("alignment of mismatched dtypes");
  if (a.cols() != b.rows()) {
    throw Error("inner dimensions differ: A is " + std::to_string(a.rows()) +
                "x" + std::to_string(a.cols()) + ", B is " +
                std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  if (a.empty() || b.empty()) throw Error("alignment of an empty matrix");
  const uint64_t n = a.rows(), k_dim = a.cols(), m = b.cols();
  const int width = a.bit_width();

  std::vector<uint64_t> count_a(width), count_b(width);
  uint64_t differing = 0;
  for (uint64_t k = 0; k < k_dim; ++k) {
    std::fill(count_a.begin(), count_a.end(), 0);
    std::fill(count_b.begin(), count_b.end(), 0);
    for (uint64_t i = 0; i < n; ++i) {
      for (uint32_t v = a.raw(i, k); v != 0; v &= v - 1) ++count_a[std::countr_zero(v)];
    }
    for (uint64_t j = 0; j < m; ++j) {
      for (uint32_t v = b.raw(k, j); v != 0; v &= v - 1) ++count_b[std::countr_zero(v)];
    }
    for (int bit = 0; bit < width; ++bit) {
      differing += count_a[bit] * (m - count_b[bit]) +
                   (n - count_a[bit]) * count_b[bit];
    }
  }
  return {differing, n * k_dim * m, width};
}

MatrixSummary Summarize(const Matrix& m) {
  if (m.empty()) throw Error("summary of an empty matrix");
  MatrixSummary s;
  const DType dtype = m.dtype();
  const int width = m.bit_width();
  uint64_t weight = 0, zeros = 0, finite = 0;
  double mean = 0.0, m2 = 0.0;
  std::unordered_set<uint32_t> distinct;
  for (uint32_t raw : m.data()) {
    const BitPattern bits(raw, width);
    weight += std::popcount(raw);
    if (IsZeroPattern(bits, dtype)) ++zeros;
    if (IsNanPattern(bits, dtype)) ++s.nans;
    distinct.insert(raw);
    const double v = ToDouble(bits, dtype);
    if (std::isfinite(v)) {
      ++finite;
      const double delta = v - mean;
      mean += delta / static_cast<double>(finite);
      m2 += delta * (v - mean);
    }
  }
  const auto cells = static_cast<double>(m.size());
  s.mean_hamming_weight = static_cast<double>(weight) / cells;
  s.sparsity_fraction = static_cast<double>(zeros) / cells;
  s.value_mean = mean;
  s.value_std = finite > 0 ? std::sqrt(m2 / static_cast<double>(finite)) : 0.0;
  s.distinct_value_count = distinct.size();
  s.saturations = m.stats().saturations;
  return s;
}

}  // namespace powerlab
