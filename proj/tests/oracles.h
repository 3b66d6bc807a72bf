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

// Reference implementations used only by tests. None of them call into the
// library's conversion or arithmetic code.

#ifndef POWERLAB_TESTS_ORACLES_H_
#define POWERLAB_TESTS_ORACLES_H_

#include <immintrin.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "powerlab/gemm.h"
#include "powerlab/matrix.h"

namespace oracle {

// Binary16 decode straight from the field definitions.
inline double HalfToDouble(uint16_t h) {
  const int sign = h >> 15;
  const int exp = (h >> 10) & 0x1F;
  const int frac = h & 0x3FF;
  double v;
  if (exp == 0) {
    v = std::ldexp(frac, -24);
  } else if (exp == 31) {
    v = frac ? NAN : INFINITY;
  } else {
    v = std::ldexp(1024 + frac, exp - 25);
  }
  return sign ? -v : v;
}

// Nearest binary16 by search over every finite non-negative encoding,
// ties to the even encoding. |x| >= 65520 rounds to infinity; with
// `saturate` a finite x goes to max-finite instead.
class HalfTable {
 public:
  HalfTable() {
    for (uint32_t h = 0; h < 0x7C00; ++h) values_.push_back(HalfToDouble(static_cast<uint16_t>(h)));
  }

  uint16_t Round(double x, bool saturate) const {
    if (std::isnan(x)) return 0x7E00;
    const uint16_t sign = std::signbit(x) ? 0x8000 : 0;
    const double a = std::fabs(x);
    if (std::isinf(a)) return sign | 0x7C00;
    if (a >= 65520.0) return sign | (saturate ? 0x7BFF : 0x7C00);
    const auto it = std::lower_bound(values_.begin(), values_.end(), a);
    size_t hi = static_cast<size_t>(it - values_.begin());
    if (hi == values_.size()) return sign | 0x7BFF;  // (65504, 65520)
    if (values_[hi] == a || hi == 0) return sign | static_cast<uint16_t>(hi);
    const size_t lo = hi - 1;
    const double dlo = a - values_[lo], dhi = values_[hi] - a;
    size_t pick;
    if (dlo < dhi) {
      pick = lo;
    } else if (dhi < dlo) {
      pick = hi;
    } else {
      pick = (lo % 2 == 0) ? lo : hi;
    }
    return sign | static_cast<uint16_t>(pick);
  }

  static const HalfTable& Get() {
    static const HalfTable t;
    return t;
  }

 private:
  std::vector<double> values_;  // index == encoding, ascending
};

// Hardware F16C conversion (round to nearest even). Overflow gives
// infinity, so the saturation rule is layered on top.
inline bool HaveF16c() { return __builtin_cpu_supports("f16c"); }

__attribute__((target("f16c"))) inline uint16_t F16cRound(float x) {
  return static_cast<uint16_t>(
      _mm_extract_epi16(_mm_cvtps_ph(_mm_set_ss(x), _MM_FROUND_TO_NEAREST_INT), 0));
}

__attribute__((target("f16c"))) inline float F16cToFloat(uint16_t h) {
  return _mm_cvtss_f32(_mm_cvtph_ps(_mm_cvtsi32_si128(h)));
}

inline uint16_t F16cConvertSaturating(float x) {
  uint16_t h = F16cRound(x);
  if ((h & 0x7FFF) == 0x7C00 && std::isfinite(x)) h = (h & 0x8000) | 0x7BFF;
  return h;
}

// Naive triple loop, k ascending, with each policy's rounding done by the
// helpers above. D encodings are for alpha = 1, beta = 0; toggles follow the
// lane model (first step has no predecessor). Arithmetic NaN is the
// positive quiet NaN.
struct Reference {
  std::vector<uint32_t> d;
  std::vector<uint32_t> acc_bits;  // final accumulator encoding per output
  uint64_t toggles_a = 0, toggles_b = 0, toggles_acc = 0;
  bool int32_overflow = false;
};

inline Reference NaiveGemm(const powerlab::Matrix& a, const powerlab::Matrix& b) {
  using powerlab::DType;
  const auto& table = HalfTable::Get();
  const size_t n = a.rows(), kd = a.cols(), m = b.cols();
  Reference r;
  r.d.resize(n * m);
  r.acc_bits.resize(n * m);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < m; ++j) {
      uint32_t prev_a = 0, prev_b = 0, prev_acc = 0;
      float f32 = 0.0f;
      double h16 = 0.0;  // exact binary16 value of the running sum
      int64_t i64 = 0;
      for (size_t k = 0; k < kd; ++k) {
        const uint32_t ra = a.raw(i, k), rb = b.raw(k, j);
        uint32_t acc_bits = 0;
        switch (a.dtype()) {
          case DType::kFP32: {
            const float p = std::bit_cast<float>(ra) * std::bit_cast<float>(rb);
            f32 = f32 + p;
            if (std::isnan(f32)) f32 = std::bit_cast<float>(0x7FC00000u);
            acc_bits = std::bit_cast<uint32_t>(f32);
            break;
          }
          case DType::kFP16: {
            const double p = HalfToDouble(static_cast<uint16_t>(ra)) *
                             HalfToDouble(static_cast<uint16_t>(rb));
            const uint16_t p16 = table.Round(p, false);
            const uint16_t s16 = table.Round(h16 + HalfToDouble(p16), false);
            h16 = HalfToDouble(s16);
            acc_bits = s16;
            break;
          }
          case DType::kFP16T: {
            const auto x = static_cast<float>(HalfToDouble(static_cast<uint16_t>(ra)));
            const auto y = static_cast<float>(HalfToDouble(static_cast<uint16_t>(rb)));
            f32 = std::fmaf(x, y, f32);  // exact product, one rounding
            if (std::isnan(f32)) f32 = std::bit_cast<float>(0x7FC00000u);
            acc_bits = std::bit_cast<uint32_t>(f32);
            break;
          }
          case DType::kINT8: {
            i64 += static_cast<int64_t>(static_cast<int8_t>(ra)) *
                   static_cast<int8_t>(rb);
            if (i64 > INT32_MAX || i64 < INT32_MIN) r.int32_overflow = true;
            acc_bits = static_cast<uint32_t>(static_cast<int32_t>(i64));
            break;
          }
        }
        if (k > 0) {
          r.toggles_a += std::popcount(ra ^ prev_a);
          r.toggles_b += std::popcount(rb ^ prev_b);
          r.toggles_acc += std::popcount(acc_bits ^ prev_acc);
        }
        prev_a = ra;
        prev_b = rb;
        prev_acc = acc_bits;
      }
      r.acc_bits[i * m + j] = prev_acc;
      uint32_t out = 0;
      switch (a.dtype()) {
        case DType::kFP32: out = std::bit_cast<uint32_t>(f32); break;
        case DType::kFP16: out = prev_acc; break;
        case DType::kFP16T: out = table.Round(f32, true); break;
        case DType::kINT8: {
          const int64_t c = std::clamp<int64_t>(i64, -128, 127);
          out = static_cast<uint8_t>(static_cast<int8_t>(c));
          break;
        }
      }
      r.d[i * m + j] = out;
    }
  }
  return r;
}

// Differing bits over all multiplied pairs (A[i,k], B[k,j]), by brute force.
inline uint64_t BruteForceDifferingBits(const powerlab::Matrix& a,
                                        const powerlab::Matrix& b) {
  uint64_t diff = 0;
  for (size_t i = 0; i < a.rows(); ++i) {
    for (size_t k = 0; k < a.cols(); ++k) {
      for (size_t j = 0; j < b.cols(); ++j) {
        diff += std::popcount(a.raw(i, k) ^ b.raw(k, j));
      }
    }
  }
  return diff;
}

}  // namespace oracle

#endif  // POWERLAB_TESTS_ORACLES_H_
