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

#include "powerlab/codec.h"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "powerlab/rng.h"

namespace powerlab {
namespace {

std::string Upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

// Round a non-negative double below 2^52 to the nearest integer, ties to even.
double RoundHalfEvenNonNeg(double s) {
  double fl = std::floor(s);
  const double frac = s - fl;
  if (frac > 0.5 || (frac == 0.5 && std::fmod(fl, 2.0) != 0.0)) fl += 1.0;
  return fl;
}

double RoundHalfEven(double s) {
  return s < 0 ? -RoundHalfEvenNonNeg(-s) : RoundHalfEvenNonNeg(s);
}

uint32_t Fp32Bits(double value, ConversionStats* stats) {
  if (std::isnan(value)) {
    if (stats) ++stats->nans;
    const auto b = std::bit_cast<uint64_t>(value);
    const auto sign = static_cast<uint32_t>(b >> 32) & 0x80000000u;
    const auto payload = static_cast<uint32_t>(b >> 29) & 0x003FFFFFu;
    return sign | 0x7FC00000u | payload;
  }
  if (std::isfinite(value) &&
      std::fabs(value) > std::numeric_limits<float>::max()) {
    if (stats) ++stats->saturations;
    const float sat = std::copysign(std::numeric_limits<float>::max(),
                                    static_cast<float>(value));
    return std::bit_cast<uint32_t>(sat);
  }
  return std::bit_cast<uint32_t>(static_cast<float>(value));
}

uint32_t Int8Bits(double value, bool clamp, ConversionStats* stats) {
  if (std::isnan(value)) {
    if (!clamp) throw Error("INT8 cannot encode NaN");
    if (stats) ++stats->nans;
    return 0;
  }
  double r = std::isinf(value) ? value : RoundHalfEven(value);
  if (r < -128.0 || r > 127.0) {
    if (!clamp) {
      throw Error("value " + std::to_string(value) +
                  " is outside the INT8 range [-128, 127]");
    }
    if (stats) ++stats->saturations;
    r = std::clamp(r, -128.0, 127.0);
  }
  return static_cast<uint8_t>(static_cast<int8_t>(r));
}

}  // namespace

std::string_view DTypeName(DType t) {
  switch (t) {
    case DType::kFP32: return "FP32";
    case DType::kFP16: return "FP16";
    case DType::kFP16T: return "FP16T";
    case DType::kINT8: return "INT8";
  }
  return "?";
}

DType ParseDType(std::string_view name) {
  const std::string u = Upper(name);
  if (u == "FP32") return DType::kFP32;
  if (u == "FP16") return DType::kFP16;
  if (u == "FP16T" || u == "FP16-T") return DType::kFP16T;
  if (u == "INT8") return DType::kINT8;
  throw Error("unknown dtype '" + std::string(name) + "'");
}

BitPattern::BitPattern(uint32_t raw, int width) : raw_(raw), width_(width) {
  if (width < 1 || width > 32) {
    throw Error("bit width " + std::to_string(width) + " out of range");
  }
  if ((raw & ~MaskFor(width)) != 0) {
    throw Error("raw bits exceed width " + std::to_string(width));
  }
}

BitPattern BitPattern::Complement() const {
  return BitPattern(~raw_ & mask(), width_);
}

BitPattern BitPattern::Xor(const BitPattern& other) const {
  if (other.width_ != width_) throw Error("bit width mismatch in xor");
  return BitPattern(raw_ ^ other.raw_, width_);
}

Scalar Scalar::FromRaw(DType dtype, uint32_t raw) {
  return Scalar{dtype, BitPattern(raw, BitWidth(dtype))};
}

uint16_t RoundToBinary16(double x, Overflow overflow, ConversionStats* stats) {
  const auto bits = std::bit_cast<uint64_t>(x);
  const auto sign = static_cast<uint16_t>((bits >> 48) & 0x8000u);
  if (std::isnan(x)) {
    if (stats) ++stats->nans;
    const auto payload = static_cast<uint16_t>((bits >> 42) & 0x3FFu);
    return static_cast<uint16_t>(sign | kBinary16QuietNan | payload);
  }
  const double ax = std::fabs(x);
  if (std::isinf(ax)) return static_cast<uint16_t>(sign | 0x7C00u);
  if (ax > 65504.0) {
    if (overflow == Overflow::kSaturate) {
      if (stats) ++stats->saturations;
      return static_cast<uint16_t>(sign | kBinary16MaxFinite);
    }
    // Halfway point between max-finite and the next binade rounds to inf.
    return static_cast<uint16_t>(sign | (ax >= 65520.0 ? 0x7C00u
                                                       : kBinary16MaxFinite));
  }
  if (ax < 0x1p-14) {
    // Subnormal range: integer multiples of 2^-24. 1024 carries into the
    // smallest normal encoding.
    const auto r = static_cast<uint16_t>(RoundHalfEvenNonNeg(ax * 0x1p24));
    return static_cast<uint16_t>(sign | r);
  }
  int e = 0;
  std::frexp(ax, &e);
  int exponent = e - 1;  // ax in [2^exponent, 2^(exponent+1))
  auto significand = static_cast<uint32_t>(
      RoundHalfEvenNonNeg(std::ldexp(ax, 10 - exponent)));
  if (significand == 2048) {
    significand = 1024;
    ++exponent;
  }
  return static_cast<uint16_t>(sign | ((exponent + 15) << 10) |
                               (significand - 1024));
}

double Binary16ToDouble(uint16_t h) {
  const int exponent = (h >> 10) & 0x1F;
  const int mantissa = h & 0x3FF;
  double v;
  if (exponent == 0) {
    v = std::ldexp(static_cast<double>(mantissa), -24);
  } else if (exponent == 31) {
    if (mantissa != 0) {
      const uint64_t sign = uint64_t{h & 0x8000u} << 48;
      return std::bit_cast<double>(sign | 0x7FF8000000000000ULL |
                                   (uint64_t(mantissa) << 42));
    }
    v = std::numeric_limits<double>::infinity();
  } else {
    v = std::ldexp(static_cast<double>(mantissa + 1024), exponent - 25);
  }
  return (h & 0x8000) ? -v : v;
}

uint16_t RoundFloatToBinary16(float x) {
  constexpr uint32_t kInfBits = 255u << 23;
  constexpr uint32_t kOverflowBits = (127u + 16u) << 23;    // 2^16
  constexpr uint32_t kMinNormalBits = 113u << 23;           // 2^-14
  constexpr uint32_t kDenormMagicBits = ((127u - 15u) + (23u - 10u) + 1u) << 23;
  uint32_t u = std::bit_cast<uint32_t>(x);
  const uint32_t sign = (u >> 16) & 0x8000u;
  u &= 0x7FFFFFFFu;
  uint32_t out;
  if (u >= kOverflowBits) {
    out = u > kInfBits ? (kBinary16QuietNan | ((u >> 13) & 0x3FFu)) : 0x7C00u;
  } else if (u < kMinNormalBits) {
    // Adding the magic constant lines the 10 result bits up at the bottom of
    // the float mantissa; the FPU's round-to-nearest-even does the rest.
    const float shifted = std::bit_cast<float>(u) +
                          std::bit_cast<float>(kDenormMagicBits);
    out = std::bit_cast<uint32_t>(shifted) - kDenormMagicBits;
  } else {
    const uint32_t odd = (u >> 13) & 1u;
    u += (static_cast<uint32_t>(15 - 127) << 23) + 0xFFFu + odd;
    out = u >> 13;
  }
  return static_cast<uint16_t>(out | sign);
}

float Binary16ToFloat(uint16_t bits) {
  static const std::vector<float> table = [] {
    std::vector<float> t(65536);
    for (uint32_t h = 0; h < 65536; ++h) {
      t[h] = static_cast<float>(Binary16ToDouble(static_cast<uint16_t>(h)));
    }
    return t;
  }();
  return table[bits];
}

BitPattern EncodeBits(double value, DType dtype, ConversionStats* stats) {
  switch (dtype) {
    case DType::kFP32:
      return BitPattern(Fp32Bits(value, stats), 32);
    case DType::kFP16:
    case DType::kFP16T:
      return BitPattern(RoundToBinary16(value, Overflow::kSaturate, stats), 16);
    case DType::kINT8:
      return BitPattern(Int8Bits(value, /*clamp=*/false, stats), 8);
  }
  throw Error("bad dtype");
}

BitPattern EncodeBits(const Value& value, DType dtype, ConversionStats* stats) {
  if (const auto* nan = std::get_if<NanMarker>(&value)) {
    if (nan->bits.width() != BitWidth(dtype) || !IsNanPattern(nan->bits, dtype)) {
      throw Error("NaN marker does not belong to dtype " +
                  std::string(DTypeName(dtype)));
    }
    return nan->bits;
  }
  return EncodeBits(std::get<double>(value), dtype, stats);
}

Value DecodeBits(BitPattern bits, DType dtype) {
  if (bits.width() != BitWidth(dtype)) {
    throw Error("bit width " + std::to_string(bits.width()) +
                " does not match " + std::string(DTypeName(dtype)));
  }
  if (IsNanPattern(bits, dtype)) return NanMarker{bits};
  return ToDouble(bits, dtype);
}

double ToDouble(BitPattern bits, DType dtype) {
  switch (dtype) {
    case DType::kFP32:
      return std::bit_cast<float>(bits.raw());
    case DType::kFP16:
    case DType::kFP16T:
      return Binary16ToDouble(static_cast<uint16_t>(bits.raw()));
    case DType::kINT8:
      return static_cast<int8_t>(static_cast<uint8_t>(bits.raw()));
  }
  throw Error("bad dtype");
}

bool IsNanPattern(BitPattern bits, DType dtype) {
  const uint32_t r = bits.raw();
  switch (dtype) {
    case DType::kFP32:
      return (r & 0x7F800000u) == 0x7F800000u && (r & 0x007FFFFFu) != 0;
    case DType::kFP16:
    case DType::kFP16T:
      return (r & 0x7C00u) == 0x7C00u && (r & 0x03FFu) != 0;
    case DType::kINT8:
      return false;
  }
  return false;
}

bool IsZeroPattern(BitPattern bits, DType dtype) {
  if (!IsFloat(dtype)) return bits.raw() == 0;
  const uint32_t sign = 1u << (BitWidth(dtype) - 1);
  return (bits.raw() & ~sign) == 0;
}

Scalar ConvertFromFp32(float value, DType dtype, ConversionStats* stats) {
  switch (dtype) {
    case DType::kFP32:
      if (std::isnan(value) && stats) ++stats->nans;
      return Scalar{dtype, BitPattern(std::bit_cast<uint32_t>(value), 32)};
    case DType::kFP16:
    case DType::kFP16T:
      return Scalar{dtype, BitPattern(RoundToBinary16(value, Overflow::kSaturate,
                                                      stats),
                                      16)};
    case DType::kINT8:
      return Scalar{dtype, BitPattern(Int8Bits(value, /*clamp=*/true, stats), 8)};
  }
  throw Error("bad dtype");
}

int HammingWeight(BitPattern bits) { return std::popcount(bits.raw()); }

double BitAlignment(const Scalar& a, const Scalar& b) {
  if (a.dtype != b.dtype) throw Error("bit alignment of mismatched dtypes");
  const int width = BitWidth(a.dtype);
  return static_cast<double>(width - HammingWeight(a.bits.Xor(b.bits))) /
         width;
}

std::string_view PerturbModeName(PerturbMode mode) {
  switch (mode) {
    case PerturbMode::kFlipRandom: return "flip_random";
    case PerturbMode::kRandomizeLow: return "randomize_low";
    case PerturbMode::kRandomizeHigh: return "randomize_high";
    case PerturbMode::kZeroLow: return "zero_low";
    case PerturbMode::kZeroHigh: return "zero_high";
  }
  return "?";
}

PerturbMode ParsePerturbMode(std::string_view name) {
  for (auto m : {PerturbMode::kFlipRandom, PerturbMode::kRandomizeLow,
                 PerturbMode::kRandomizeHigh, PerturbMode::kZeroLow,
                 PerturbMode::kZeroHigh}) {
    if (PerturbModeName(m) == name) return m;
  }
  throw Error("unknown perturbation mode '" + std::string(name) + "'");
}

Scalar PerturbBits(const Scalar& s, PerturbMode mode, int n, Rng* rng,
                   ConversionStats* stats) {
  const int width = BitWidth(s.dtype);
  if (n < 0 || n > width) {
    throw Error("perturbation bit count " + std::to_string(n) +
                " outside [0, " + std::to_string(width) + "]");
  }
  if (NeedsRng(mode) && rng == nullptr) {
    throw Error(std::string(PerturbModeName(mode)) + " requires a generator");
  }
  const uint32_t full = BitPattern::MaskFor(width);
  const uint32_t low = n == 0 ? 0u : BitPattern::MaskFor(n);
  const uint32_t high = full & ~(n == width ? 0u : BitPattern::MaskFor(width - n));
  uint32_t raw = s.bits.raw();

  switch (mode) {
    case PerturbMode::kFlipRandom: {
      std::array<uint8_t, 32> pos{};
      std::iota(pos.begin(), pos.begin() + width, uint8_t{0});
      uint32_t flips = 0;
      for (int i = 0; i < n; ++i) {
        const auto j = i + static_cast<int>(rng->Below(width - i));
        std::swap(pos[i], pos[j]);
        flips |= 1u << pos[i];
      }
      raw ^= flips;
      break;
    }
    case PerturbMode::kRandomizeLow:
      raw = (raw & ~low) | (static_cast<uint32_t>(rng->Next()) & low);
      break;
    case PerturbMode::kRandomizeHigh:
      raw = (raw & ~high) |
            (static_cast<uint32_t>(rng->Next() << (width - n)) & high);
      break;
    case PerturbMode::kZeroLow:
      raw &= ~low;
      break;
    case PerturbMode::kZeroHigh:
      raw &= ~high;
      break;
  }
  Scalar out = Scalar::FromRaw(s.dtype, raw & full);
  if (stats && IsNanPattern(out.bits, out.dtype)) ++stats->nans;
  return out;
}

}  // namespace powerlab
