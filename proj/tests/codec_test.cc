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

#include <bit>
#include <cmath>

#include "oracles.h"
#include "powerlab/codec.h"
#include "powerlab/rng.h"

namespace powerlab {
namespace {

TEST(DType, WidthsAndNames) {
  EXPECT_EQ(BitWidth(DType::kFP32), 32);
  EXPECT_EQ(BitWidth(DType::kFP16), 16);
  EXPECT_EQ(BitWidth(DType::kFP16T), 16);
  EXPECT_EQ(BitWidth(DType::kINT8), 8);
  EXPECT_EQ(ParseDType("fp16-t"), DType::kFP16T);
  EXPECT_EQ(ParseDType("INT8"), DType::kINT8);
  EXPECT_THROW(ParseDType("BF16"), Error);
}

TEST(BitPattern, RejectsBitsAboveWidth) {
  EXPECT_THROW(BitPattern(0x100, 8), Error);
  EXPECT_EQ(BitPattern(0xF0, 8).Complement().raw(), 0x0Fu);
  EXPECT_EQ(BitPattern(0xFFFF, 16).Xor(BitPattern(0x00FF, 16)).raw(), 0xFF00u);
}

TEST(Encode, SpecExamples) {
  EXPECT_EQ(EncodeBits(0.0, DType::kFP16).raw(), 0x0000u);
  EXPECT_EQ(EncodeBits(1.0, DType::kFP32).raw(), 0x3F800000u);
  EXPECT_EQ(EncodeBits(-1.0, DType::kINT8).raw(), 0xFFu);
  EXPECT_EQ(EncodeBits(1.0, DType::kFP16).raw(), 0x3C00u);
  EXPECT_EQ(EncodeBits(-2.0, DType::kFP16T).raw(), 0xC000u);
}

TEST(Encode, HalfTiesToEven) {
  // 2049 lies halfway between 2048 (even mantissa) and 2050.
  EXPECT_EQ(ToDouble(EncodeBits(2049.0, DType::kFP16), DType::kFP16), 2048.0);
  EXPECT_EQ(ToDouble(EncodeBits(2051.0, DType::kFP16), DType::kFP16), 2052.0);
}

TEST(Encode, Int8RangeIsAnError) {
  EXPECT_THROW(EncodeBits(128.0, DType::kINT8), Error);
  EXPECT_THROW(EncodeBits(-129.0, DType::kINT8), Error);
  EXPECT_EQ(EncodeBits(2.5, DType::kINT8).raw(), 2u);  // half to even
  EXPECT_EQ(EncodeBits(-127.5, DType::kINT8).raw(), 0x80u);
}

TEST(Encode, FpOverflowSaturatesAndCounts) {
  ConversionStats st;
  EXPECT_EQ(EncodeBits(1e6, DType::kFP16, &st).raw(), kBinary16MaxFinite);
  EXPECT_EQ(EncodeBits(-1e6, DType::kFP16, &st).raw(), 0xFBFFu);
  EXPECT_EQ(st.saturations, 2u);
  EXPECT_EQ(EncodeBits(INFINITY, DType::kFP16, &st).raw(), 0x7C00u);
  EXPECT_EQ(st.saturations, 2u);
}

TEST(Decode, SpecExamples) {
  EXPECT_EQ(std::get<double>(DecodeBits(BitPattern(0, 16), DType::kFP16)), 0.0);
  EXPECT_EQ(std::get<double>(DecodeBits(BitPattern(0x80, 8), DType::kINT8)), -128.0);
  EXPECT_EQ(std::get<double>(DecodeBits(BitPattern(0x7BFF, 16), DType::kFP16)), 65504.0);
  EXPECT_THROW(DecodeBits(BitPattern(0, 8), DType::kFP16), Error);
  const Value nan = DecodeBits(BitPattern(0x7E01, 16), DType::kFP16);
  ASSERT_TRUE(std::holds_alternative<NanMarker>(nan));
  EXPECT_EQ(EncodeBits(nan, DType::kFP16).raw(), 0x7E01u);
}

TEST(Decode, AllHalfPatternsRoundTrip) {
  for (uint32_t h = 0; h < 65536; ++h) {
    const BitPattern p(h, 16);
    const Value v = DecodeBits(p, DType::kFP16);
    ASSERT_EQ(EncodeBits(v, DType::kFP16), p) << std::hex << h;
    if (const auto* d = std::get_if<double>(&v)) {
      const double want = oracle::HalfToDouble(static_cast<uint16_t>(h));
      ASSERT_EQ(std::bit_cast<uint64_t>(*d), std::bit_cast<uint64_t>(want)) << std::hex << h;
    }
  }
}

TEST(Decode, AllInt8RoundTrip) {
  for (uint32_t b = 0; b < 256; ++b) {
    const BitPattern p(b, 8);
    const double v = std::get<double>(DecodeBits(p, DType::kINT8));
    EXPECT_EQ(v, static_cast<int8_t>(b));
    EXPECT_EQ(EncodeBits(v, DType::kINT8), p);
  }
}

TEST(Convert, MatchesF16cOnRandomFloats) {
  if (!oracle::HaveF16c()) GTEST_SKIP() << "no F16C";
  Rng rng(99);
  for (int i = 0; i < 200000; ++i) {
    const auto f = std::bit_cast<float>(static_cast<uint32_t>(rng.Next()));
    if (std::isnan(f)) continue;
    ASSERT_EQ(ConvertFromFp32(f, DType::kFP16).bits.raw(), oracle::F16cConvertSaturating(f))
        << f;
  }
}

TEST(Convert, MatchesEnumerationOracleNearHalfValues) {
  const auto& t = oracle::HalfTable::Get();
  // Every binary16 value, its neighbours in binary32 and the exact midpoints.
  for (uint32_t h = 0; h < 0x7C00; ++h) {
    const float x = static_cast<float>(oracle::HalfToDouble(static_cast<uint16_t>(h)));
    const float up = std::nextafter(x, INFINITY);
    const float down = std::nextafter(x, 0.0f);
    const float mid = static_cast<float>(
        (oracle::HalfToDouble(static_cast<uint16_t>(h)) +
         oracle::HalfToDouble(static_cast<uint16_t>(h + 1))) / 2);
    for (float f : {x, up, down, mid, -x, -mid}) {
      ASSERT_EQ(ConvertFromFp32(f, DType::kFP16).bits.raw(), t.Round(f, true)) << f;
    }
  }
}

TEST(Convert, FastPathAgreesWithDoublePath) {
  for (uint64_t u = 0; u < (1ull << 32); u += 4093) {
    const auto f = std::bit_cast<float>(static_cast<uint32_t>(u));
    if (std::isnan(f)) continue;
    ASSERT_EQ(RoundFloatToBinary16(f), RoundToBinary16(f, Overflow::kInfinity)) << u;
  }
}

TEST(Convert, SpecExamples) {
  ConversionStats st;
  EXPECT_EQ(ConvertFromFp32(70000.0f, DType::kFP16, &st).bits.raw(), 0x7BFFu);
  EXPECT_EQ(st.saturations, 1u);
  EXPECT_EQ(ConvertFromFp32(300.0f, DType::kINT8, &st).bits.raw(), 0x7Fu);
  EXPECT_EQ(ConvertFromFp32(-300.0f, DType::kINT8, &st).bits.raw(), 0x80u);
  EXPECT_EQ(st.saturations, 3u);
  EXPECT_EQ(ConvertFromFp32(1.5f, DType::kFP32).bits.raw(), 0x3FC00000u);
}

TEST(Hamming, Examples) {
  EXPECT_EQ(HammingWeight(BitPattern(0xFF, 8)), 8);
  EXPECT_EQ(HammingWeight(EncodeBits(1.0, DType::kFP16)), 4);  // 0x3C00
  EXPECT_EQ(HammingWeight(BitPattern(0, 32)), 0);
}

TEST(Alignment, Examples) {
  const auto s = [](uint32_t raw) { return Scalar::FromRaw(DType::kFP16, raw); };
  EXPECT_EQ(BitAlignment(s(0x1234), s(0x1234)), 1.0);
  EXPECT_EQ(BitAlignment(s(0x0000), s(0xFFFF)), 0.0);
  EXPECT_EQ(BitAlignment(s(0x0000), s(0x0001)), 0.9375);
  EXPECT_THROW(BitAlignment(s(0), Scalar::FromRaw(DType::kINT8, 0)), Error);
}

TEST(Perturb, FlipRandomFlipsExactlyN) {
  Rng rng(5);
  for (DType t : kAllDTypes) {
    for (int n = 0; n <= BitWidth(t); ++n) {
      const Scalar base = Scalar::FromRaw(t, 0);
      for (int rep = 0; rep < 50; ++rep) {
        const Scalar p = PerturbBits(base, PerturbMode::kFlipRandom, n, &rng);
        ASSERT_EQ(HammingWeight(p.bits.Xor(base.bits)), n);
      }
    }
  }
}

TEST(Perturb, ZeroModes) {
  const Scalar x = Scalar::FromRaw(DType::kFP16, 0xFFFF);
  EXPECT_EQ(PerturbBits(x, PerturbMode::kZeroLow, 4, nullptr).bits.raw(), 0xFFF0u);
  EXPECT_EQ(PerturbBits(x, PerturbMode::kZeroHigh, 1, nullptr).bits.raw(), 0x7FFFu);
  EXPECT_EQ(PerturbBits(x, PerturbMode::kZeroHigh, 16, nullptr).bits.raw(), 0u);
  EXPECT_THROW(PerturbBits(x, PerturbMode::kZeroLow, 17, nullptr), Error);
  EXPECT_THROW(PerturbBits(x, PerturbMode::kFlipRandom, 1, nullptr), Error);
}

TEST(Perturb, RandomizeTouchesOnlySelectedBits) {
  Rng rng(11);
  const Scalar x = Scalar::FromRaw(DType::kFP32, 0x12345678);
  for (int n = 0; n <= 32; ++n) {
    const uint32_t low = n == 32 ? ~0u : ((1u << n) - 1);
    const uint32_t high = n == 0 ? 0u : ~0u << (32 - n);
    for (int rep = 0; rep < 20; ++rep) {
      const auto lo = PerturbBits(x, PerturbMode::kRandomizeLow, n, &rng).bits.raw();
      ASSERT_EQ(lo & ~low, 0x12345678u & ~low);
      const auto hi = PerturbBits(x, PerturbMode::kRandomizeHigh, n, &rng).bits.raw();
      ASSERT_EQ(hi & ~high, 0x12345678u & ~high);
    }
  }
}

TEST(Perturb, NanResultIsCounted) {
  ConversionStats st;
  // Randomizing all exponent and mantissa bits of a half hits NaN patterns.
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    PerturbBits(Scalar::FromRaw(DType::kFP16, 0), PerturbMode::kRandomizeLow, 15, &rng, &st);
  }
  EXPECT_GT(st.nans, 0u);
}

}  // namespace
}  // namespace powerlab
