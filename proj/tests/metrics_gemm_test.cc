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

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.h"
#include "powerlab/gemm.h"
#include "powerlab/metrics.h"
#include "powerlab/patterns.h"
#include "powerlab/rng.h"

namespace powerlab {
namespace {

Matrix RandomBits(size_t r, size_t c, DType t, Rng& rng) {
  Matrix m(r, c, t);
  for (auto& x : m.mutable_data()) {
    x = static_cast<uint32_t>(rng.Next()) & BitPattern::MaskFor(BitWidth(t));
  }
  return m;
}

TEST(Metrics, MeanHammingWeight) {
  Matrix m(1, 2, DType::kINT8);
  m.set_raw(0, 0, 0xFF);
  EXPECT_EQ(MeanHammingWeight(m), 4.0);
  EXPECT_THROW(MeanHammingWeight(Matrix()), Error);
}

TEST(Metrics, AlignmentClosedFormMatchesBruteForce) {
  Rng rng(17);
  for (DType t : kAllDTypes) {
    for (int rep = 0; rep < 20; ++rep) {
      const size_t n = 1 + rng.Below(9), k = 1 + rng.Below(9), m = 1 + rng.Below(9);
      const Matrix a = RandomBits(n, k, t, rng), b = RandomBits(k, m, t, rng);
      const AlignmentCount c = PairwiseAlignmentCounts(a, b);
      EXPECT_EQ(c.pairs, n * k * m);
      EXPECT_EQ(c.differing_bits, oracle::BruteForceDifferingBits(a, b));
    }
  }
}

TEST(Metrics, AlignmentEdgeCases) {
  const Matrix a = ConstantFill(3, 3, 1.0, DType::kFP16);
  EXPECT_EQ(MeanPairwiseAlignment(a, a), 1.0);
  EXPECT_EQ(MeanPairwiseAlignment(a, a.Complemented()), 0.0);
  EXPECT_THROW(PairwiseAlignmentCounts(a, ConstantFill(2, 3, 1.0, DType::kFP16)), Error);
}

TEST(Metrics, Summary) {
  const std::vector<double> v = {0, 2, 2, 4};
  Matrix m = Matrix::FromValues(2, 2, DType::kFP32, v);
  m.set_raw(0, 1, 0x80000000);  // -0
  const MatrixSummary s = Summarize(m);
  EXPECT_EQ(s.sparsity_fraction, 0.5);
  EXPECT_EQ(s.distinct_value_count, 4u);
  EXPECT_DOUBLE_EQ(s.value_mean, 1.5);
  EXPECT_DOUBLE_EQ(s.value_std, std::sqrt(2.75));
  Matrix n(1, 2, DType::kFP16);
  n.set_raw(0, 0, 0x7E00);
  n.set_raw(0, 1, 0x3C00);
  const MatrixSummary sn = Summarize(n);
  EXPECT_EQ(sn.nans, 1u);
  EXPECT_EQ(sn.value_mean, 1.0);
}

TEST(Policy, PerDType) {
  EXPECT_EQ(ArithmeticPolicy::For(DType::kFP16T).accumulate, Precision::kBinary32);
  EXPECT_EQ(ArithmeticPolicy::For(DType::kFP16).accumulate, Precision::kBinary16);
  EXPECT_EQ(ArithmeticPolicy::For(DType::kINT8).accumulate, Precision::kInt32);
  EXPECT_EQ(ArithmeticPolicy::For(DType::kINT8).accumulator_width(), 32);
  EXPECT_THROW(ArithmeticPolicy::For(DType::kFP32).CheckCompatible(DType::kFP16), Error);
}

TEST(Gemm, SpecExample) {
  const std::vector<double> a = {1, 2, 3, 4}, b = {5, 6, 7, 8};
  for (DType t : kAllDTypes) {
    const Matrix ma = Matrix::FromValues(2, 2, t, a), mb = Matrix::FromValues(2, 2, t, b);
    const GemmResult r = Gemm({ma, mb}, ArithmeticPolicy::For(t));
    EXPECT_EQ(r.d.value(0, 0), 19.0) << DTypeName(t);
    EXPECT_EQ(r.d.value(0, 1), 22.0);
    EXPECT_EQ(r.d.value(1, 0), 43.0);
    EXPECT_EQ(r.d.value(1, 1), 50.0);
  }
}

TEST(Gemm, AlphaBeta) {
  const std::vector<double> a = {1, 2, 3, 4}, b = {5, 6, 7, 8}, c = {1, 1, 1, 1};
  for (DType t : kAllDTypes) {
    const Matrix ma = Matrix::FromValues(2, 2, t, a), mb = Matrix::FromValues(2, 2, t, b);
    const Matrix mc = Matrix::FromValues(2, 2, t, c);
    const double alpha = t == DType::kINT8 ? 1.0 : 0.5;
    const GemmResult r = Gemm({ma, mb, &mc, alpha, 2.0}, ArithmeticPolicy::For(t));
    EXPECT_EQ(r.d.value(0, 0), 19 * alpha + 2) << DTypeName(t);
    EXPECT_EQ(r.accumulators[3], 50.0);
  }
}

TEST(Gemm, Errors) {
  const Matrix a(2, 3, DType::kFP16), b(2, 2, DType::kFP16);
  EXPECT_THROW(Gemm({a, b}, ArithmeticPolicy::For(DType::kFP16)), Error);
  const Matrix c(3, 2, DType::kFP32);
  EXPECT_THROW(Gemm({a, c}, ArithmeticPolicy::For(DType::kFP16)), Error);
}

TEST(Gemm, Int32OverflowReported) {
  // 127*127*K exceeds 2^31 once K > 133143.
  const Matrix a = ConstantFill(1, 140000, 127, DType::kINT8);
  const Matrix b = ConstantFill(140000, 1, 127, DType::kINT8);
  EXPECT_THROW(Gemm({a, b}, ArithmeticPolicy::For(DType::kINT8)), Error);
}

TEST(Gemm, Fp16OverflowsToInfinityFp16tSaturates) {
  const Matrix a = ConstantFill(1, 4, 200, DType::kFP16);
  const Matrix b = ConstantFill(4, 1, 200, DType::kFP16);
  const GemmResult h = Gemm({a, b}, ArithmeticPolicy::For(DType::kFP16));
  EXPECT_EQ(h.d.raw(0, 0), 0x7C00u);  // 160000 overflows binary16
  const Matrix at = ConstantFill(1, 4, 200, DType::kFP16T);
  const Matrix bt = ConstantFill(4, 1, 200, DType::kFP16T);
  const GemmResult t = Gemm({at, bt}, ArithmeticPolicy::For(DType::kFP16T));
  EXPECT_EQ(t.accumulators[0], 160000.0);
  EXPECT_EQ(t.d.raw(0, 0), kBinary16MaxFinite);
  EXPECT_EQ(t.stats.saturations, 1u);
}

TEST(Gemm, ArithmeticNanIsCanonical) {
  // (+inf) * 1 + (-inf) * 1 is invalid on every float path.
  for (DType t : {DType::kFP32, DType::kFP16, DType::kFP16T}) {
    const std::vector<double> a = {INFINITY, -INFINITY}, b = {1, 1};
    const Matrix ma = Matrix::FromValues(1, 2, t, a), mb = Matrix::FromValues(2, 1, t, b);
    const GemmResult r = Gemm({ma, mb}, ArithmeticPolicy::For(t));
    EXPECT_EQ(r.d.raw(0, 0), t == DType::kFP32 ? 0x7FC00000u : 0x7E00u) << DTypeName(t);
  }
}

TEST(Gemm, MatchesNaiveOracleWithToggles) {
  Rng rng(2026);
  for (DType t : kAllDTypes) {
    for (int rep = 0; rep < 25; ++rep) {
      const size_t n = 1 + rng.Below(20), k = 1 + rng.Below(20), m = 1 + rng.Below(20);
      const double std = t == DType::kINT8 ? 30 : (rep % 2 ? 8 : 1024);
      const Matrix a = GaussianFill(n, k, 0, std, t, rng.Next());
      const Matrix b = GaussianFill(k, m, 0, std, t, rng.Next());
      const oracle::Reference ref = oracle::NaiveGemm(a, b);
      const SimulationResult sim = Simulate(a, b, ArithmeticPolicy::For(t), {4, 4, 3});
      for (size_t i = 0; i < ref.d.size(); ++i) {
        ASSERT_EQ(sim.gemm.d.data()[i], ref.d[i])
            << DTypeName(t) << " element " << i;
      }
      EXPECT_EQ(sim.toggles.operand_a_toggles, ref.toggles_a);
      EXPECT_EQ(sim.toggles.operand_b_toggles, ref.toggles_b);
      EXPECT_EQ(sim.toggles.accumulator_toggles, ref.toggles_acc);
      uint64_t tiles = 0;
      for (auto x : sim.toggles.tile_totals) tiles += x;
      EXPECT_EQ(tiles, sim.toggles.total_toggles());
      EXPECT_EQ(Gemm({a, b}, ArithmeticPolicy::For(t)).d, sim.gemm.d);
    }
  }
}

TEST(Switching, ZeroAndConstantStreams) {
  for (DType t : kAllDTypes) {
    const Matrix z(16, 16, t);
    EXPECT_EQ(SwitchingActivity(z, z, ArithmeticPolicy::For(t)).total_toggles(), 0u);
    const Matrix c = ConstantFill(8, 8, 1, t);
    const ToggleReport r = SwitchingActivity(c, c, ArithmeticPolicy::For(t));
    EXPECT_EQ(r.operand_toggles(), 0u);
    EXPECT_GT(r.accumulator_toggles, 0u);  // the running sum still moves
  }
}

TEST(Switching, ThreadCountDoesNotChangeCounts) {
  const Matrix a = GaussianFill(50, 33, 0, 8, DType::kFP16, 1);
  const Matrix b = GaussianFill(33, 47, 0, 8, DType::kFP16, 2);
  const auto p = ArithmeticPolicy::For(DType::kFP16);
  const ToggleReport one = SwitchingActivity(a, b, p, {16, 16, 1});
  const ToggleReport many = SwitchingActivity(a, b, p, {16, 16, 5});
  EXPECT_EQ(one.total_toggles(), many.total_toggles());
  EXPECT_EQ(one.tile_totals, many.tile_totals);
  EXPECT_EQ(one.tiles_down, 4u);
  EXPECT_EQ(one.tiles_across, 3u);
}

}  // namespace
}  // namespace powerlab
