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

#include "powerlab/gemm.h"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <limits>
#include <thread>

namespace powerlab {
namespace {

enum class Kind { kF32, kF16, kF16T, kI8 };

Kind KindOf(const ArithmeticPolicy& p) {
  using P = Precision;
  if (p.multiply == P::kBinary32 && p.accumulate == P::kBinary32) return Kind::kF32;
  if (p.multiply == P::kBinary16 && p.accumulate == P::kBinary16) return Kind::kF16;
  if (p.multiply == P::kBinary16 && p.accumulate == P::kBinary32) return Kind::kF16T;
  if (p.multiply == P::kInt8 && p.accumulate == P::kInt32) return Kind::kI8;
  throw Error("unsupported arithmetic policy " +
              std::string(PrecisionName(p.multiply)) + " x " +
              std::string(PrecisionName(p.accumulate)));
}

// NaN results of arithmetic are canonical (positive quiet NaN) so output
// bits do not depend on the host's default NaN or payload propagation.
float CanonicalNan(float x) {
  return std::isnan(x) ? std::bit_cast<float>(0x7FC00000u) : x;
}
uint16_t CanonicalNan(uint16_t h) {
  return (h & 0x7FFFu) > 0x7C00u ? kBinary16QuietNan : h;
}

template <Kind K>
struct Mac;

template <>
struct Mac<Kind::kF32> {
  float acc = 0.0f;
  void Step(uint32_t a, uint32_t b) {
    const float p = std::bit_cast<float>(a) * std::bit_cast<float>(b);
    acc = CanonicalNan(acc + p);
  }
  uint32_t bits() const { return std::bit_cast<uint32_t>(acc); }
  double value() const { return acc; }
  bool overflowed() const { return false; }
};

template <>
struct Mac<Kind::kF16> {
  uint16_t acc = 0;
  // Binary32 holds every binary16 product exactly, and binary32 sums of
  // binary16 values round to binary16 without double-rounding error.
  void Step(uint32_t a, uint32_t b) {
    const float p = Binary16ToFloat(static_cast<uint16_t>(a)) *
                    Binary16ToFloat(static_cast<uint16_t>(b));
    const uint16_t p16 = RoundFloatToBinary16(p);
    acc = CanonicalNan(
        RoundFloatToBinary16(Binary16ToFloat(acc) + Binary16ToFloat(p16)));
  }
  uint32_t bits() const { return acc; }
  double value() const { return Binary16ToDouble(acc); }
  bool overflowed() const { return false; }
};

template <>
struct Mac<Kind::kF16T> {
  float acc = 0.0f;
  void Step(uint32_t a, uint32_t b) {
    const float p = Binary16ToFloat(static_cast<uint16_t>(a)) *
                    Binary16ToFloat(static_cast<uint16_t>(b));
    acc = CanonicalNan(acc + p);
  }
  uint32_t bits() const { return std::bit_cast<uint32_t>(acc); }
  double value() const { return acc; }
  bool overflowed() const { return false; }
};

template <>
struct Mac<Kind::kI8> {
  int64_t acc = 0;
  bool overflow = false;
  void Step(uint32_t a, uint32_t b) {
    acc += int64_t{static_cast<int8_t>(a)} * int64_t{static_cast<int8_t>(b)};
    if (acc > std::numeric_limits<int32_t>::max() ||
        acc < std::numeric_limits<int32_t>::min()) {
      overflow = true;
    }
  }
  uint32_t bits() const {
    return static_cast<uint32_t>(static_cast<int32_t>(acc));
  }
  double value() const { return static_cast<double>(acc); }
  bool overflowed() const { return overflow; }
};

struct LaneOutputs {
  std::vector<double>* accumulators = nullptr;
  ToggleReport* toggles = nullptr;  // tile totals written per tile row
};

struct PartialCounts {
  uint64_t a = 0, b = 0, acc = 0;
  bool overflow = false;
  size_t overflow_index = 0;
};

// Processes output rows [row_begin, row_end). `bt` is B transposed so both
// operand streams are contiguous.
template <Kind K, bool kCountToggles>
PartialCounts RunRows(const Matrix& a, const Matrix& bt, size_t row_begin,
                      size_t row_end, const LaneOutputs& out) {
  PartialCounts counts;
  const size_t k_dim = a.cols(), m = bt.rows();
  const auto a_data = a.data();
  const auto b_data = bt.data();
  for (size_t i = row_begin; i < row_end; ++i) {
    const uint32_t* a_row = a_data.data() + i * k_dim;
    for (size_t j = 0; j < m; ++j) {
      const uint32_t* b_col = b_data.data() + j * k_dim;
      Mac<K> mac;
      uint64_t ta = 0, tb = 0, tacc = 0;
      mac.Step(a_row[0], b_col[0]);
      uint32_t prev_acc = mac.bits();
      for (size_t k = 1; k < k_dim; ++k) {
        mac.Step(a_row[k], b_col[k]);
        if constexpr (kCountToggles) {
          ta += std::popcount(a_row[k] ^ a_row[k - 1]);
          tb += std::popcount(b_col[k] ^ b_col[k - 1]);
          const uint32_t acc = mac.bits();
          tacc += std::popcount(acc ^ prev_acc);
          prev_acc = acc;
        }
      }
      if (mac.overflowed() && !counts.overflow) {
        counts.overflow = true;
        counts.overflow_index = i * m + j;
      }
      if (out.accumulators) (*out.accumulators)[i * m + j] = mac.value();
      if constexpr (kCountToggles) {
        counts.a += ta;
        counts.b += tb;
        counts.acc += tacc;
        ToggleReport& r = *out.toggles;
        r.tile_totals[(i / r.tile_rows) * r.tiles_across + j / r.tile_cols] +=
            ta + tb + tacc;
      }
    }
  }
  return counts;
}

template <Kind K, bool kCountToggles>
PartialCounts RunAll(const Matrix& a, const Matrix& bt, size_t row_block,
                     unsigned threads, const LaneOutputs& out) {
  const size_t n = a.rows();
  const size_t blocks = (n + row_block - 1) / row_block;
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(blocks)));
  std::vector<PartialCounts> partial(threads);
  auto work = [&](unsigned t) {
    // Blocks are dealt round-robin; each block is a whole tile row.
    for (size_t blk = t; blk < blocks; blk += threads) {
      const size_t begin = blk * row_block;
      const size_t end = std::min(n, begin + row_block);
      const PartialCounts c = RunRows<K, kCountToggles>(a, bt, begin, end, out);
      partial[t].a += c.a;
      partial[t].b += c.b;
      partial[t].acc += c.acc;
      if (c.overflow && !partial[t].overflow) {
        partial[t].overflow = true;
        partial[t].overflow_index = c.overflow_index;
      }
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
  }
  PartialCounts total;
  total.overflow_index = std::numeric_limits<size_t>::max();
  for (const auto& p : partial) {
    total.a += p.a;
    total.b += p.b;
    total.acc += p.acc;
    if (p.overflow) {
      total.overflow = true;
      total.overflow_index = std::min(total.overflow_index, p.overflow_index);
    }
  }
  return total;
}

template <bool kCountToggles>
PartialCounts Dispatch(Kind kind, const Matrix& a, const Matrix& bt,
                       size_t row_block, unsigned threads,
                       const LaneOutputs& out) {
  switch (kind) {
    case Kind::kF32: return RunAll<Kind::kF32, kCountToggles>(a, bt, row_block, threads, out);
    case Kind::kF16: return RunAll<Kind::kF16, kCountToggles>(a, bt, row_block, threads, out);
    case Kind::kF16T: return RunAll<Kind::kF16T, kCountToggles>(a, bt, row_block, threads, out);
    case Kind::kI8: return RunAll<Kind::kI8, kCountToggles>(a, bt, row_block, threads, out);
  }
  throw Error("bad policy");
}

void CheckOperands(const Matrix& a, const Matrix& b,
                   const ArithmeticPolicy& policy) {
  if (a.dtype() != b.dtype()) throw Error("A and B dtypes differ");
  if (a.cols() != b.rows()) {
    throw Error("dimension mismatch: A is " + std::to_string(a.rows()) + "x" +
                std::to_string(a.cols()) + ", B is " + std::to_string(b.rows()) +
                "x" + std::to_string(b.cols()));
  }
  if (a.empty() || b.empty()) throw Error("empty GEMM operand");
  policy.CheckCompatible(a.dtype());
}

void ThrowOverflow(const PartialCounts& c, size_t cols) {
  if (c.overflow) {
    throw Error("INT32 accumulator overflow at D[" +
                std::to_string(c.overflow_index / cols) + "," +
                std::to_string(c.overflow_index % cols) + "]");
  }
}

unsigned ResolveThreads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Applies alpha/beta in the accumulator format and converts to the output
// dtype.
Matrix Epilogue(Kind kind, DType dtype, size_t n, size_t m,
                const std::vector<double>& acc, const Matrix* c, double alpha,
                double beta, ConversionStats& stats) {
  Matrix d(n, m, dtype);
  auto out = d.mutable_data();
  const bool scale = alpha != 1.0;
  const bool add_c = beta != 0.0 && c != nullptr;
  for (size_t idx = 0; idx < out.size(); ++idx) {
    const uint32_t c_raw = add_c ? c->data()[idx] : 0;
    switch (kind) {
      case Kind::kF32:
      case Kind::kF16T: {
        auto v = static_cast<float>(acc[idx]);
        if (scale) v = static_cast<float>(alpha) * v;
        if (add_c) {
          const float cv = kind == Kind::kF32
                               ? std::bit_cast<float>(c_raw)
                               : Binary16ToFloat(static_cast<uint16_t>(c_raw));
          const float t = static_cast<float>(beta) * cv;
          v = v + t;
        }
        v = CanonicalNan(v);
        out[idx] = kind == Kind::kF32 ? std::bit_cast<uint32_t>(v)
                                      : ConvertFromFp32(v, dtype, &stats).bits.raw();
        break;
      }
      case Kind::kF16: {
        uint16_t v = RoundFloatToBinary16(static_cast<float>(acc[idx]));
        if (scale) {
          const uint16_t a16 = RoundToBinary16(alpha, Overflow::kInfinity);
          v = RoundFloatToBinary16(Binary16ToFloat(a16) * Binary16ToFloat(v));
        }
        if (add_c) {
          const uint16_t b16 = RoundToBinary16(beta, Overflow::kInfinity);
          const uint16_t t = RoundFloatToBinary16(
              Binary16ToFloat(b16) * Binary16ToFloat(static_cast<uint16_t>(c_raw)));
          v = RoundFloatToBinary16(Binary16ToFloat(v) + Binary16ToFloat(t));
        }
        v = CanonicalNan(v);
        if (IsNanPattern(BitPattern(v, 16), dtype)) ++stats.nans;
        out[idx] = v;
        break;
      }
      case Kind::kI8: {
        double v = acc[idx];
        if (scale) v *= alpha;
        if (add_c) v += beta * static_cast<int8_t>(c_raw);
        double r = std::nearbyint(v);
        if (r < -128.0 || r > 127.0) {
          ++stats.saturations;
          r = std::clamp(r, -128.0, 127.0);
        }
        out[idx] = static_cast<uint8_t>(static_cast<int8_t>(r));
        break;
      }
    }
  }
  return d;
}

}  // namespace

std::string_view PrecisionName(Precision p) {
  switch (p) {
    case Precision::kBinary32: return "binary32";
    case Precision::kBinary16: return "binary16";
    case Precision::kInt8: return "int8";
    case Precision::kInt32: return "int32";
  }
  return "?";
}

ArithmeticPolicy ArithmeticPolicy::For(DType dtype) {
  switch (dtype) {
    case DType::kFP32: return {Precision::kBinary32, Precision::kBinary32};
    case DType::kFP16: return {Precision::kBinary16, Precision::kBinary16};
    case DType::kFP16T: return {Precision::kBinary16, Precision::kBinary32};
    case DType::kINT8: return {Precision::kInt8, Precision::kInt32};
  }
  throw Error("bad dtype");
}

int ArithmeticPolicy::accumulator_width() const {
  return accumulate == Precision::kBinary16 ? 16
         : accumulate == Precision::kInt8   ? 8
                                            : 32;
}

void ArithmeticPolicy::CheckCompatible(DType dtype) const {
  const Kind kind = KindOf(*this);
  const bool ok = (kind == Kind::kF32 && dtype == DType::kFP32) ||
                  (kind == Kind::kI8 && dtype == DType::kINT8) ||
                  ((kind == Kind::kF16 || kind == Kind::kF16T) &&
                   (dtype == DType::kFP16 || dtype == DType::kFP16T));
  if (!ok) {
    throw Error("policy operand format " + std::string(PrecisionName(multiply)) +
                " does not match dtype " + std::string(DTypeName(dtype)));
  }
}

GemmResult Gemm(const GemmProblem& p, const ArithmeticPolicy& policy) {
  CheckOperands(p.a, p.b, policy);
  const size_t n = p.a.rows(), m = p.b.cols();
  if (p.c != nullptr) {
    if (p.c->rows() != n || p.c->cols() != m) throw Error("C must be N x M");
    if (p.c->dtype() != p.a.dtype()) throw Error("C dtype differs from A");
  }
  const Kind kind = KindOf(policy);
  GemmResult result;
  result.accumulators.resize(n * m);
  LaneOutputs out{&result.accumulators, nullptr};
  const Matrix bt = p.b.Transposed();
  ThrowOverflow(Dispatch<false>(kind, p.a, bt, 16, ResolveThreads(0), out), m);
  result.d = Epilogue(kind, p.a.dtype(), n, m, result.accumulators, p.c,
                      p.alpha, p.beta, result.stats);
  return result;
}

namespace {

ToggleReport EmptyReport(size_t n, size_t m, const SwitchingOptions& o) {
  if (o.tile_rows == 0 || o.tile_cols == 0) throw Error("tile shape must be positive");
  ToggleReport r;
  r.tile_rows = o.tile_rows;
  r.tile_cols = o.tile_cols;
  r.tiles_down = (n + o.tile_rows - 1) / o.tile_rows;
  r.tiles_across = (m + o.tile_cols - 1) / o.tile_cols;
  r.tile_totals.assign(r.tiles_down * r.tiles_across, 0);
  return r;
}

}  // namespace

ToggleReport SwitchingActivity(const Matrix& a, const Matrix& b,
                               const ArithmeticPolicy& policy,
                               const SwitchingOptions& options) {
  CheckOperands(a, b, policy);
  ToggleReport report = EmptyReport(a.rows(), b.cols(), options);
  LaneOutputs out{nullptr, &report};
  const Matrix bt = b.Transposed();
  const PartialCounts c = Dispatch<true>(KindOf(policy), a, bt,
                                         options.tile_rows,
                                         ResolveThreads(options.threads), out);
  report.operand_a_toggles = c.a;
  report.operand_b_toggles = c.b;
  report.accumulator_toggles = c.acc;
  return report;
}

SimulationResult Simulate(const Matrix& a, const Matrix& b,
                          const ArithmeticPolicy& policy,
                          const SwitchingOptions& options) {
  CheckOperands(a, b, policy);
  const size_t n = a.rows(), m = b.cols();
  SimulationResult r;
  r.toggles = EmptyReport(n, m, options);
  r.gemm.accumulators.resize(n * m);
  LaneOutputs out{&r.gemm.accumulators, &r.toggles};
  const Matrix bt = b.Transposed();
  const Kind kind = KindOf(policy);
  const PartialCounts c = Dispatch<true>(kind, a, bt, options.tile_rows,
                                         ResolveThreads(options.threads), out);
  ThrowOverflow(c, m);
  r.toggles.operand_a_toggles = c.a;
  r.toggles.operand_b_toggles = c.b;
  r.toggles.accumulator_toggles = c.acc;
  r.gemm.d = Epilogue(kind, a.dtype(), n, m, r.gemm.accumulators, nullptr, 1.0,
                      0.0, r.gemm.stats);
  return r;
}

}  // namespace powerlab
