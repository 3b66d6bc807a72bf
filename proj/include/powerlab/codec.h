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

// Bit-exact scalar encodings for the four experiment datatypes.
//
// FP32 is IEEE 754 binary32, FP16 and FP16T share IEEE 754 binary16 (they
// only differ in how the GEMM accumulates), INT8 is two's complement.
// Bit positions are numbered from 0 = least significant.

#ifndef POWERLAB_CODEC_H_
#define POWERLAB_CODEC_H_

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace powerlab {

class Rng;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DType : uint8_t { kFP32 = 0, kFP16 = 1, kFP16T = 2, kINT8 = 3 };

inline constexpr std::array<DType, 4> kAllDTypes = {
    DType::kFP32, DType::kFP16, DType::kFP16T, DType::kINT8};

constexpr int BitWidth(DType t) {
  switch (t) {
    case DType::kFP32: return 32;
    case DType::kFP16:
    case DType::kFP16T: return 16;
    case DType::kINT8: return 8;
  }
  return 0;
}

constexpr bool IsFloat(DType t) { return t != DType::kINT8; }

// "FP32", "FP16", "FP16T", "INT8".
std::string_view DTypeName(DType t);
// Accepts the names above, case-insensitively, plus "FP16-T".
DType ParseDType(std::string_view name);

// Raw encoding of up to 32 bits. Bits at or above `width` are always zero.
class BitPattern {
 public:
  constexpr BitPattern() = default;
  BitPattern(uint32_t raw, int width);

  uint32_t raw() const { return raw_; }
  int width() const { return width_; }
  uint32_t mask() const { return MaskFor(width_); }

  BitPattern Complement() const;
  BitPattern Xor(const BitPattern& other) const;

  static constexpr uint32_t MaskFor(int width) {
    return width >= 32 ? 0xFFFFFFFFu : ((1u << width) - 1u);
  }

  friend bool operator==(const BitPattern&, const BitPattern&) = default;

 private:
  uint32_t raw_ = 0;
  int width_ = 0;
};

struct Scalar {
  DType dtype = DType::kFP32;
  BitPattern bits;

  // Builds a scalar from raw bits, validating the width.
  static Scalar FromRaw(DType dtype, uint32_t raw);

  friend bool operator==(const Scalar&, const Scalar&) = default;
};

// Conversion side effects. Saturations and NaNs are counted, not fatal.
struct ConversionStats {
  uint64_t saturations = 0;
  uint64_t nans = 0;

  ConversionStats& operator+=(const ConversionStats& o) {
    saturations += o.saturations;
    nans += o.nans;
    return *this;
  }
  friend bool operator==(const ConversionStats&,
                         const ConversionStats&) = default;
};

// A decoded NaN keeps its raw bits so that re-encoding is lossless.
struct NanMarker {
  BitPattern bits;
  friend bool operator==(const NanMarker&, const NanMarker&) = default;
};
using Value = std::variant<double, NanMarker>;

// Canonical encoding, rounding to nearest with ties to even. Finite FP
// values beyond the largest finite encoding saturate (and are counted);
// infinities stay infinite. INT8 values are rounded half-to-even and throw
// if the result lies outside [-128, 127].
BitPattern EncodeBits(double value, DType dtype,
                      ConversionStats* stats = nullptr);
BitPattern EncodeBits(const Value& value, DType dtype,
                      ConversionStats* stats = nullptr);

// Exact inverse of EncodeBits. Throws on width mismatch.
Value DecodeBits(BitPattern bits, DType dtype);

// Numeric view of an encoding; NaN patterns become a quiet double NaN.
double ToDouble(BitPattern bits, DType dtype);
inline double ToDouble(const Scalar& s) { return ToDouble(s.bits, s.dtype); }

bool IsNanPattern(BitPattern bits, DType dtype);
// +0 and -0 for FP kinds, 0 for INT8.
bool IsZeroPattern(BitPattern bits, DType dtype);

// FP32 input conversion used by every generator: identity for FP32,
// saturating round-to-nearest-even binary16 for FP16/FP16T, and
// round-half-to-even then clamp for INT8.
Scalar ConvertFromFp32(float value, DType dtype,
                       ConversionStats* stats = nullptr);

int HammingWeight(BitPattern bits);
inline int HammingWeight(const Scalar& s) { return HammingWeight(s.bits); }

// Fraction of equal bit positions. Throws if the dtypes differ.
double BitAlignment(const Scalar& a, const Scalar& b);

enum class PerturbMode {
  kFlipRandom,
  kRandomizeLow,
  kRandomizeHigh,
  kZeroLow,
  kZeroHigh,
};

std::string_view PerturbModeName(PerturbMode mode);
PerturbMode ParsePerturbMode(std::string_view name);
constexpr bool NeedsRng(PerturbMode mode) {
  return mode == PerturbMode::kFlipRandom ||
         mode == PerturbMode::kRandomizeLow ||
         mode == PerturbMode::kRandomizeHigh;
}

// Applies a bit-level perturbation to `n` bits of the raw encoding. The
// "high" modes count from the top of the encoding, so they include the FP
// sign bit. A perturbation that yields a NaN pattern keeps it and counts it.
Scalar PerturbBits(const Scalar& s, PerturbMode mode, int n, Rng* rng,
                   ConversionStats* stats = nullptr);

// Low-level binary16 helpers shared with the GEMM simulator.
enum class Overflow { kSaturate, kInfinity };

// Correctly rounded (ties to even) binary16 encoding of a double.
uint16_t RoundToBinary16(double x, Overflow overflow,
                         ConversionStats* stats = nullptr);
// NaN encodings keep their sign and payload in the wider format.
double Binary16ToDouble(uint16_t bits);

// Fast paths for the GEMM datapath. RoundFloatToBinary16 is correctly
// rounded with IEEE overflow to infinity; Binary16ToFloat is exact.
uint16_t RoundFloatToBinary16(float x);
float Binary16ToFloat(uint16_t bits);

inline constexpr uint16_t kBinary16MaxFinite = 0x7BFF;  // 65504
inline constexpr uint16_t kBinary16QuietNan = 0x7E00;

}  // namespace powerlab

#endif  // POWERLAB_CODEC_H_
