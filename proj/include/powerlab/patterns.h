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

// Seeded generators for GEMM input matrices.
//
// Every generator draws values as FP32 and converts them with
// ConvertFromFp32, so all float dtypes see the same underlying numbers for
// a given seed. A seed is split into independent streams (see rng.h) so that
// e.g. the sparsity mask does not depend on how many values were drawn.

#ifndef POWERLAB_PATTERNS_H_
#define POWERLAB_PATTERNS_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "powerlab/codec.h"
#include "powerlab/matrix.h"

namespace powerlab {

Matrix GaussianFill(size_t rows, size_t cols, double mean, double std,
                    DType dtype, uint64_t seed);

// Draws `set_size` Gaussian members, then fills each cell with a uniform
// choice among them (with replacement).
Matrix SetDrawFill(size_t rows, size_t cols, size_t set_size, double set_mean,
                   double set_std, DType dtype, uint64_t seed);

Matrix ConstantFill(size_t rows, size_t cols, double value, DType dtype);

enum class SortAxis { kRows, kColumns, kWithinRows };
std::string_view SortAxisName(SortAxis axis);
SortAxis ParseSortAxis(std::string_view name);

// Moves the smallest `percent` of values, ascending, into the leading
// positions of the traversal order for `axis` (row-major, column-major, or
// each row on its own). Ties keep traversal order; the unselected values
// keep their relative order in the remaining positions.
Matrix PartialSort(const Matrix& m, SortAxis axis, double percent);

// Zeroes exactly round(fraction * cells) cells chosen without replacement.
Matrix ApplySparsity(const Matrix& m, double fraction, uint64_t seed);

// PerturbBits on every element with a fresh draw per element.
Matrix PerturbMatrix(const Matrix& m, PerturbMode mode, int n, uint64_t seed);

// ---------------------------------------------------------------------------
// Pattern specifications.

struct GaussianParams {
  friend bool operator==(const GaussianParams&, const GaussianParams&) = default;
};
struct SetDrawParams {
  size_t set_size = 1;
  friend bool operator==(const SetDrawParams&, const SetDrawParams&) = default;
};
struct ConstantPerturbedParams {
  PerturbMode mode = PerturbMode::kFlipRandom;
  int bits = 0;
  friend bool operator==(const ConstantPerturbedParams&,
                         const ConstantPerturbedParams&) = default;
};
struct PlacementParams {
  SortAxis axis = SortAxis::kRows;
  double percent = 0.0;
  // Transpose B so the sorted runs of A meet the sorted runs of B.
  bool align_b = false;
  friend bool operator==(const PlacementParams&,
                         const PlacementParams&) = default;
};
struct SparsityParams {
  double fraction = 0.0;
  // Fully sort (rows axis) before zeroing.
  bool presort = false;
  friend bool operator==(const SparsityParams&, const SparsityParams&) = default;
};
struct BitSparsityParams {
  PerturbMode mode = PerturbMode::kZeroLow;  // kZeroLow or kZeroHigh
  int bits = 0;
  friend bool operator==(const BitSparsityParams&,
                         const BitSparsityParams&) = default;
};

using FamilyParams =
    std::variant<GaussianParams, SetDrawParams, ConstantPerturbedParams,
                 PlacementParams, SparsityParams, BitSparsityParams>;

std::string_view FamilyName(const FamilyParams& params);
// Default-initialized parameters for a family name.
FamilyParams MakeFamily(std::string_view name);

// Gaussian used for values, set members and constant bases.
struct Distribution {
  double mean = 0.0;
  double std = 1024.0;
  friend bool operator==(const Distribution&, const Distribution&) = default;
};

// Describes how to build an (A, B) pair: A is rows x inner, B is inner x cols.
struct PatternSpec {
  FamilyParams family;
  Distribution dist;
  size_t rows = 2048;
  size_t inner = 2048;
  size_t cols = 2048;
  DType dtype = DType::kFP32;
  uint64_t seed_a = 1;
  uint64_t seed_b = 2;

  // Throws Error naming the offending field.
  void Validate() const;

  friend bool operator==(const PatternSpec&, const PatternSpec&) = default;
};

// Sets a numeric parameter by name: "mean", "std", "set_size", "bits"
// (alias "n"), "percent", "fraction". Throws if the family has no such
// parameter.
void SetParameter(PatternSpec& spec, std::string_view name, double value);

struct PatternPair {
  Matrix a;
  Matrix b;
};

// Builds A from seed_a and B from seed_b with the same recipe. B is
// generated as cols x inner and transposed, except for placement specs
// without align_b where it is generated as inner x cols directly.
PatternPair BuildPatternPair(const PatternSpec& spec);

}  // namespace powerlab

#endif  // POWERLAB_PATTERNS_H_
