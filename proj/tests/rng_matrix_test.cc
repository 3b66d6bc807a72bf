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
#include <set>
#include <sstream>

#include "powerlab/matrix.h"
#include "powerlab/rng.h"

namespace powerlab {
namespace {

// Reference xoshiro256** seeded by SplitMix64, written out longhand.
TEST(Rng, MatchesLonghandXoshiro) {
  uint64_t sm = 42;
  auto splitmix = [&sm] {
    uint64_t z = (sm += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  };
  uint64_t s[4] = {splitmix(), splitmix(), splitmix(), splitmix()};
  auto rotl = [](uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
  Rng rng(42);
  for (int i = 0; i < 1000; ++i) {
    const uint64_t want = rotl(s[1] * 5, 7) * 9;
    const uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    ASSERT_EQ(rng.Next(), want) << i;
  }
}

TEST(Rng, SameSeedSameStream) {
  Rng a(7), b(7), c(8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const uint64_t x = a.Next();
    ASSERT_EQ(x, b.Next());
    differs |= x != c.Next();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, DeriveSeedSeparatesStreams) {
  std::set<uint64_t> seen;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    for (uint64_t stream = 0; stream < 8; ++stream) {
      seen.insert(DeriveSeed(seed, stream));
    }
  }
  EXPECT_EQ(seen.size(), 800u);
}

TEST(Rng, BelowIsInRangeAndRoughlyUniform) {
  Rng rng(1);
  std::array<int, 7> counts{};
  for (int i = 0; i < 70000; ++i) {
    const auto v = rng.Below(7);
    ASSERT_LT(v, 7u);
    ++counts[v];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(Rng, GaussianMoments) {
  Rng rng(2024);
  const int n = 400000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.Gaussian();
    ASSERT_TRUE(std::isfinite(g));
    sum += g;
    sq += g * g;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(sq / n - mean * mean, 1.0, 0.01);
}

TEST(Rng, Uniform01Range) {
  Rng rng(3);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.Uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Matrix, FromValuesAndAccess) {
  const std::vector<double> v = {1, 2, 3, 4, 5, 6};
  const Matrix m = Matrix::FromValues(2, 3, DType::kFP16, v);
  EXPECT_EQ(m.value(1, 2), 6.0);
  EXPECT_EQ(m.raw(0, 0), 0x3C00u);
  const Matrix t = m.Transposed();
  EXPECT_EQ(t.rows(), 3u);
  EXPECT_EQ(t.value(2, 1), 6.0);
  EXPECT_EQ(t.Transposed(), m);
  EXPECT_EQ(m.Complemented().raw(0, 0), 0xC3FFu);
  EXPECT_THROW(Matrix::FromValues(2, 2, DType::kFP16, v), Error);
}

TEST(Matrix, BinaryRoundTrip) {
  for (DType t : kAllDTypes) {
    Matrix m(3, 5, t);
    Rng rng(static_cast<uint64_t>(t) + 10);
    for (auto& c : m.mutable_data()) c = static_cast<uint32_t>(rng.Next()) & BitPattern::MaskFor(BitWidth(t));
    std::stringstream ss;
    WriteMatrix(ss, m);
    EXPECT_EQ(ss.str().size(), 16u + 15u * BitWidth(t) / 8);
    EXPECT_EQ(ss.str().substr(0, 4), "PLMX");
    EXPECT_EQ(ReadMatrix(ss), m);
  }
}

TEST(Matrix, HeaderIsLittleEndian) {
  Matrix m(2, 1, DType::kINT8);
  m.set_raw(1, 0, 0xAB);
  std::stringstream ss;
  WriteMatrix(ss, m);
  const std::string s = ss.str();
  const std::string want("PLMX\x03\0\0\0\x02\0\0\0\x01\0\0\0\0\xAB", 18);
  EXPECT_EQ(s, want);
}

TEST(Matrix, RejectsCorruptFiles) {
  std::stringstream bad("PLMY");
  EXPECT_THROW(ReadMatrix(bad), Error);
  Matrix m(2, 2, DType::kFP32);
  std::stringstream ss;
  WriteMatrix(ss, m);
  std::string s = ss.str();
  s.resize(s.size() - 1);
  std::stringstream trunc(s);
  EXPECT_THROW(ReadMatrix(trunc), Error);
}

TEST(Matrix, Preview) {
  const std::vector<double> v = {1, -2};
  const std::string p = PreviewText(Matrix::FromValues(1, 2, DType::kFP16, v));
  EXPECT_NE(p.find("# FP16 1x2"), std::string::npos);
  EXPECT_NE(p.find("0x3C00"), std::string::npos);
  EXPECT_NE(p.find("-2(0xC000)"), std::string::npos);
}

}  // namespace
}  // namespace powerlab
