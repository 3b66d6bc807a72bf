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

#include "powerlab/patterns.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "powerlab/rng.h"

namespace powerlab {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void RequireDims(size_t rows, size_t cols) {
  if (rows == 0 || cols == 0) throw Error("matrix dimensions must be positive");
}

// Numeric order with NaN last; equal keys fall back to traversal index.
struct SortKey {
  double value;
  size_t index;
  bool operator<(const SortKey& o) const {
    const bool an = std::isnan(value), bn = std::isnan(o.value);
    if (an != bn) return bn;
    if (!an && value != o.value) return value < o.value;
    return index < o.index;
  }
};

// Rearranges the elements at `positions` (already in traversal order).
void SortSegment(const Matrix& in, std::span<uint32_t> out,
                 const std::vector<size_t>& positions, double percent) {
  const size_t len = positions.size();
  const auto count =
      static_cast<size_t>(std::floor(percent * static_cast<double>(len) / 100.0));
  if (count == 0) return;
  const auto src = in.data();
  const int width = in.bit_width();
  std::vector<SortKey> keys(len);
  for (size_t i = 0; i < len; ++i) {
    keys[i] = {ToDouble(BitPattern(src[positions[i]], width), in.dtype()), i};
  }
  std::vector<SortKey> selected = keys;
  std::partial_sort(selected.begin(), selected.begin() + count, selected.end());
  selected.resize(count);

  std::vector<bool> taken(len, false);
  for (const auto& k : selected) taken[k.index] = true;
  size_t dst = 0;
  for (const auto& k : selected) out[positions[dst++]] = src[positions[k.index]];
  for (size_t i = 0; i < len; ++i) {
    if (!taken[i]) out[positions[dst++]] = src[positions[i]];
  }
}

Matrix BuildOne(const PatternSpec& spec, uint64_t seed, size_t rows,
                size_t cols) {
  const auto& d = spec.dist;
  return std::visit(
      Overloaded{
          [&](const GaussianParams&) {
            return GaussianFill(rows, cols, d.mean, d.std, spec.dtype, seed);
          },
          [&](const SetDrawParams& p) {
            return SetDrawFill(rows, cols, p.set_size, d.mean, d.std,
                               spec.dtype, seed);
          },
          [&](const ConstantPerturbedParams& p) {
            Rng rng = StreamRng(seed, Stream::kBase);
            const auto base = static_cast<float>(d.mean + d.std * rng.Gaussian());
            ConversionStats stats;
            const Scalar s = ConvertFromFp32(base, spec.dtype, &stats);
            Matrix m = Matrix::Filled(rows, cols, s);
            m.mutable_stats() += stats;
            return PerturbMatrix(m, p.mode, p.bits, seed);
          },
          [&](const PlacementParams& p) {
            return PartialSort(
                GaussianFill(rows, cols, d.mean, d.std, spec.dtype, seed),
                p.axis, p.percent);
          },
          [&](const SparsityParams& p) {
            Matrix m = GaussianFill(rows, cols, d.mean, d.std, spec.dtype, seed);
            if (p.presort) m = PartialSort(m, SortAxis::kRows, 100.0);
            return ApplySparsity(m, p.fraction, seed);
          },
          [&](const BitSparsityParams& p) {
            return PerturbMatrix(
                GaussianFill(rows, cols, d.mean, d.std, spec.dtype, seed),
                p.mode, p.bits, seed);
          },
      },
      spec.family);
}

int AsBitCount(double value) {
  if (value != std::floor(value) || value < 0 || value > 32) {
    throw Error("bit count must be an integer in [0, 32]");
  }
  return static_cast<int>(value);
}

}  // namespace

Matrix GaussianFill(size_t rows, size_t cols, double mean, double std,
                    DType dtype, uint64_t seed) {
  RequireDims(rows, cols);
  if (!(std >= 0.0)) throw Error("gaussian std must be >= 0");
  Matrix m(rows, cols, dtype);
  Rng rng = StreamRng(seed, Stream::kValues);
  ConversionStats stats;
  for (auto& cell : m.mutable_data()) {
    const auto v = static_cast<float>(mean + std * rng.Gaussian());
    cell = ConvertFromFp32(v, dtype, &stats).bits.raw();
  }
  // More than 1% clamped draws means the INT8 parameters are unusable.
  if (dtype == DType::kINT8 && stats.saturations * 100 > m.size()) {
    throw Error("INT8 gaussian(mean " + std::to_string(mean) + ", std " +
                std::to_string(std) + ") clamps " +
                std::to_string(stats.saturations) + " of " +
                std::to_string(m.size()) + " draws");
  }
  m.mutable_stats() += stats;
  return m;
}

Matrix SetDrawFill(size_t rows, size_t cols, size_t set_size, double set_mean,
                   double set_std, DType dtype, uint64_t seed) {
  RequireDims(rows, cols);
  if (set_size < 1) throw Error("set_size must be >= 1");
  if (!(set_std >= 0.0)) throw Error("set std must be >= 0");
  ConversionStats stats;
  std::vector<uint32_t> members(set_size);
  Rng member_rng = StreamRng(seed, Stream::kSetMembers);
  for (auto& v : members) {
    const auto f = static_cast<float>(set_mean + set_std * member_rng.Gaussian());
    v = ConvertFromFp32(f, dtype, &stats).bits.raw();
  }
  Matrix m(rows, cols, dtype);
  Rng choice = StreamRng(seed, Stream::kSetChoice);
  for (auto& cell : m.mutable_data()) cell = members[choice.Below(set_size)];
  m.mutable_stats() += stats;
  return m;
}

Matrix ConstantFill(size_t rows, size_t cols, double value, DType dtype) {
  RequireDims(rows, cols);
  ConversionStats stats;
  const BitPattern bits = EncodeBits(value, dtype, &stats);
  Matrix m = Matrix::Filled(rows, cols, Scalar{dtype, bits});
  m.mutable_stats() += stats;
  return m;
}

std::string_view SortAxisName(SortAxis axis) {
  switch (axis) {
    case SortAxis::kRows: return "rows";
    case SortAxis::kColumns: return "columns";
    case SortAxis::kWithinRows: return "within_rows";
  }
  return "?";
}

SortAxis ParseSortAxis(std::string_view name) {
  for (auto a : {SortAxis::kRows, SortAxis::kColumns, SortAxis::kWithinRows}) {
    if (SortAxisName(a) == name) return a;
  }
  throw Error("unknown sort axis '" + std::string(name) + "'");
}

Matrix PartialSort(const Matrix& m, SortAxis axis, double percent) {
  if (!(percent >= 0.0 && percent <= 100.0)) {
    throw Error("sort percent must be in [0, 100]");
  }
  Matrix out = m;
  auto dst = out.mutable_data();
  const size_t rows = m.rows(), cols = m.cols();
  std::vector<size_t> positions;
  switch (axis) {
    case SortAxis::kRows:
      positions.resize(m.size());
      std::iota(positions.begin(), positions.end(), size_t{0});
      SortSegment(m, dst, positions, percent);
      break;
    case SortAxis::kColumns:
      positions.reserve(m.size());
      for (size_t c = 0; c < cols; ++c) {
        for (size_t r = 0; r < rows; ++r) positions.push_back(r * cols + c);
      }
      SortSegment(m, dst, positions, percent);
      break;
    case SortAxis::kWithinRows:
      positions.resize(cols);
      for (size_t r = 0; r < rows; ++r) {
        std::iota(positions.begin(), positions.end(), r * cols);
        SortSegment(m, dst, positions, percent);
      }
      break;
  }
  return out;
}

Matrix ApplySparsity(const Matrix& m, double fraction, uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error("sparsity fraction must be in [0, 1]");
  }
  Matrix out = m;
  const size_t cells = m.size();
  const auto count = static_cast<size_t>(
      std::llround(fraction * static_cast<double>(cells)));
  std::vector<size_t> idx(cells);
  std::iota(idx.begin(), idx.end(), size_t{0});
  Rng rng = StreamRng(seed, Stream::kSparsity);
  auto data = out.mutable_data();
  for (size_t i = 0; i < count; ++i) {
    const size_t j = i + rng.Below(cells - i);
    std::swap(idx[i], idx[j]);
    data[idx[i]] = 0;  // +0 for FP, 0 for INT8
  }
  return out;
}

Matrix PerturbMatrix(const Matrix& m, PerturbMode mode, int n, uint64_t seed) {
  if (n < 0 || n > m.bit_width()) {
    throw Error("perturbation bit count " + std::to_string(n) +
                " outside [0, " + std::to_string(m.bit_width()) + "]");
  }
  Matrix out = m;
  Rng rng = StreamRng(seed, Stream::kPerturb);
  ConversionStats stats;
  const DType dtype = m.dtype();
  for (auto& cell : out.mutable_data()) {
    cell = PerturbBits(Scalar::FromRaw(dtype, cell), mode, n, &rng, &stats)
               .bits.raw();
  }
  out.mutable_stats() += stats;
  return out;
}

std::string_view FamilyName(const FamilyParams& params) {
  return std::visit(
      Overloaded{
          [](const GaussianParams&) { return std::string_view("gaussian"); },
          [](const SetDrawParams&) { return std::string_view("set_draw"); },
          [](const ConstantPerturbedParams&) {
            return std::string_view("constant_perturbed");
          },
          [](const PlacementParams&) { return std::string_view("placement"); },
          [](const SparsityParams&) { return std::string_view("sparsity"); },
          [](const BitSparsityParams&) {
            return std::string_view("bit_sparsity");
          },
      },
      params);
}

FamilyParams MakeFamily(std::string_view name) {
  if (name == "gaussian") return GaussianParams{};
  if (name == "set_draw") return SetDrawParams{};
  if (name == "constant_perturbed") return ConstantPerturbedParams{};
  if (name == "placement") return PlacementParams{};
  if (name == "sparsity") return SparsityParams{};
  if (name == "bit_sparsity") return BitSparsityParams{};
  throw Error("unknown pattern family '" + std::string(name) + "'");
}

void PatternSpec::Validate() const {
  if (rows == 0) throw Error("rows: must be positive");
  if (inner == 0) throw Error("inner: must be positive");
  if (cols == 0) throw Error("cols: must be positive");
  if (seed_a == seed_b) {
    throw Error("seed_a: A and B must use different seeds");
  }
  if (!std::isfinite(dist.mean)) throw Error("mean: must be finite");
  if (!(dist.std >= 0.0) || !std::isfinite(dist.std)) {
    throw Error("std: must be finite and >= 0");
  }
  const int width = BitWidth(dtype);
  std::visit(
      Overloaded{
          [](const GaussianParams&) {},
          [](const SetDrawParams& p) {
            if (p.set_size < 1) throw Error("set_size: must be >= 1");
          },
          [&](const ConstantPerturbedParams& p) {
            if (p.bits < 0 || p.bits > width) {
              throw Error("bits: must be in [0, " + std::to_string(width) + "]");
            }
          },
          [](const PlacementParams& p) {
            if (!(p.percent >= 0.0 && p.percent <= 100.0)) {
              throw Error("percent: must be in [0, 100]");
            }
          },
          [](const SparsityParams& p) {
            if (!(p.fraction >= 0.0 && p.fraction <= 1.0)) {
              throw Error("fraction: must be in [0, 1]");
            }
          },
          [&](const BitSparsityParams& p) {
            if (p.mode != PerturbMode::kZeroLow &&
                p.mode != PerturbMode::kZeroHigh) {
              throw Error("mode: bit_sparsity needs zero_low or zero_high");
            }
            if (p.bits < 0 || p.bits > width) {
              throw Error("bits: must be in [0, " + std::to_string(width) + "]");
            }
          },
      },
      family);
}

void SetParameter(PatternSpec& spec, std::string_view name, double value) {
  if (name == "mean") {
    spec.dist.mean = value;
    return;
  }
  if (name == "std") {
    spec.dist.std = value;
    return;
  }
  bool applied = false;
  std::visit(
      Overloaded{
          [](GaussianParams&) {},
          [&](SetDrawParams& p) {
            if (name == "set_size") {
              if (value < 1 || value != std::floor(value)) {
                throw Error("set_size: must be a positive integer");
              }
              p.set_size = static_cast<size_t>(value);
              applied = true;
            }
          },
          [&](ConstantPerturbedParams& p) {
            if (name == "bits" || name == "n") {
              p.bits = AsBitCount(value);
              applied = true;
            }
          },
          [&](PlacementParams& p) {
            if (name == "percent") {
              p.percent = value;
              applied = true;
            }
          },
          [&](SparsityParams& p) {
            if (name == "fraction") {
              p.fraction = value;
              applied = true;
            }
          },
          [&](BitSparsityParams& p) {
            if (name == "bits" || name == "n") {
              p.bits = AsBitCount(value);
              applied = true;
            }
          },
      },
      spec.family);
  if (!applied) {
    throw Error("family " + std::string(FamilyName(spec.family)) +
                " has no parameter '" + std::string(name) + "'");
  }
}

PatternPair BuildPatternPair(const PatternSpec& spec) {
  spec.Validate();
  PatternPair pair;
  pair.a = BuildOne(spec, spec.seed_a, spec.rows, spec.inner);
  const auto* placement = std::get_if<PlacementParams>(&spec.family);
  if (placement != nullptr && !placement->align_b) {
    pair.b = BuildOne(spec, spec.seed_b, spec.inner, spec.cols);
  } else {
    pair.b = BuildOne(spec, spec.seed_b, spec.cols, spec.inner).Transposed();
  }
  return pair;
}

}  // namespace powerlab
