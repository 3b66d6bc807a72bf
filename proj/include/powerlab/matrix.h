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

#ifndef POWERLAB_MATRIX_H_
#define POWERLAB_MATRIX_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "powerlab/codec.h"

namespace powerlab {

// Row-major matrix of raw encodings of a single dtype. Elements are stored
// as uint32 words regardless of width; the upper bits are always zero.
class Matrix {
 public:
  Matrix() = default;
  // Zero-filled (all bits clear).
  Matrix(size_t rows, size_t cols, DType dtype);

  // Encodes each value with EncodeBits.
  static Matrix FromValues(size_t rows, size_t cols, DType dtype,
                           std::span<const double> values);
  static Matrix Filled(size_t rows, size_t cols, Scalar value);

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }
  DType dtype() const { return dtype_; }
  int bit_width() const { return BitWidth(dtype_); }

  uint32_t raw(size_t r, size_t c) const { return bits_[r * cols_ + c]; }
  void set_raw(size_t r, size_t c, uint32_t raw);
  Scalar at(size_t r, size_t c) const {
    return Scalar::FromRaw(dtype_, raw(r, c));
  }
  void set(size_t r, size_t c, const Scalar& s);
  double value(size_t r, size_t c) const {
    return ToDouble(BitPattern(raw(r, c), bit_width()), dtype_);
  }

  std::span<const uint32_t> data() const { return bits_; }
  std::span<uint32_t> mutable_data() { return bits_; }

  Matrix Transposed() const;
  Matrix Complemented() const;

  // Saturation/NaN events recorded while the matrix was generated.
  const ConversionStats& stats() const { return stats_; }
  ConversionStats& mutable_stats() { return stats_; }

  // Element equality only; generation stats are metadata.
  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && dtype_ == o.dtype_ &&
           bits_ == o.bits_;
  }

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  DType dtype_ = DType::kFP32;
  std::vector<uint32_t> bits_;
  ConversionStats stats_;
};

// Binary matrix file: 16-byte little-endian header
//   bytes 0-3   magic "PLMX"
//   bytes 4-7   dtype code (0 FP32, 1 FP16, 2 FP16T, 3 INT8)
//   bytes 8-11  rows
//   bytes 12-15 cols
// followed by rows*cols elements, row-major, each bit_width/8 bytes LE.
inline constexpr char kMatrixMagic[4] = {'P', 'L', 'M', 'X'};

void WriteMatrix(std::ostream& out, const Matrix& m);
Matrix ReadMatrix(std::istream& in);
void SaveMatrix(const std::filesystem::path& path, const Matrix& m);
Matrix LoadMatrix(const std::filesystem::path& path);

// Human-readable preview: a header line then up to max_rows x max_cols
// decoded values with the raw hex encoding.
std::string PreviewText(const Matrix& m, size_t max_rows = 8,
                        size_t max_cols = 8);

}  // namespace powerlab

#endif  // POWERLAB_MATRIX_H_
