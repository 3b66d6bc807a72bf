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

#include "powerlab/matrix.h"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace powerlab {
namespace {

void PutU32(std::ostream& out, uint32_t v) {
  const std::array<char, 4> b = {
      static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
      static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b.data(), 4);
}

uint32_t GetU32(const unsigned char* p) {
  return uint32_t{p[0]} | (uint32_t{p[1]} << 8) | (uint32_t{p[2]} << 16) |
         (uint32_t{p[3]} << 24);
}

}  // namespace

Matrix::Matrix(size_t rows, size_t cols, DType dtype)
    : rows_(rows), cols_(cols), dtype_(dtype), bits_(rows * cols, 0u) {}

Matrix Matrix::FromValues(size_t rows, size_t cols, DType dtype,
                          std::span<const double> values) {
  if (values.size() != rows * cols) {
    throw Error("expected " + std::to_string(rows * cols) + " values, got " +
                std::to_string(values.size()));
  }
  Matrix m(rows, cols, dtype);
  for (size_t i = 0; i < values.size(); ++i) {
    m.bits_[i] = EncodeBits(values[i], dtype, &m.stats_).raw();
  }
  return m;
}

Matrix Matrix::Filled(size_t rows, size_t cols, Scalar value) {
  Matrix m(rows, cols, value.dtype);
  std::fill(m.bits_.begin(), m.bits_.end(), value.bits.raw());
  return m;
}

void Matrix::set_raw(size_t r, size_t c, uint32_t raw) {
  if ((raw & ~BitPattern::MaskFor(bit_width())) != 0) {
    throw Error("raw bits exceed matrix element width");
  }
  bits_[r * cols_ + c] = raw;
}

void Matrix::set(size_t r, size_t c, const Scalar& s) {
  if (s.dtype != dtype_) throw Error("scalar dtype does not match matrix");
  bits_[r * cols_ + c] = s.bits.raw();
}

Matrix Matrix::Transposed() const {
  Matrix t(cols_, rows_, dtype_);
  for (size_t r = 0; r < rows_; ++r) {
    for (size_t c = 0; c < cols_; ++c) t.bits_[c * rows_ + r] = raw(r, c);
  }
  t.stats_ = stats_;
  return t;
}

Matrix Matrix::Complemented() const {
  Matrix out = *this;
  const uint32_t mask = BitPattern::MaskFor(bit_width());
  for (auto& b : out.bits_) b = ~b & mask;
  return out;
}

void WriteMatrix(std::ostream& out, const Matrix& m) {
  if (m.rows() > std::numeric_limits<uint32_t>::max() ||
      m.cols() > std::numeric_limits<uint32_t>::max()) {
    throw Error("matrix too large for the binary format");
  }
  out.write(kMatrixMagic, 4);
  PutU32(out, static_cast<uint32_t>(m.dtype()));
  PutU32(out, static_cast<uint32_t>(m.rows()));
  PutU32(out, static_cast<uint32_t>(m.cols()));
  const int bytes = m.bit_width() / 8;
  std::vector<char> buf(m.size() * bytes);
  size_t o = 0;
  for (uint32_t v : m.data()) {
    for (int i = 0; i < bytes; ++i) buf[o++] = static_cast<char>((v >> (8 * i)) & 0xFF);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("failed to write matrix");
}

Matrix ReadMatrix(std::istream& in) {
  std::array<unsigned char, 16> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in.gcount() != 16) throw Error("truncated matrix header");
  if (std::memcmp(header.data(), kMatrixMagic, 4) != 0) {
    throw Error("bad matrix magic");
  }
  const uint32_t code = GetU32(&header[4]);
  if (code > 3) throw Error("bad dtype code " + std::to_string(code));
  const auto dtype = static_cast<DType>(code);
  const uint32_t rows = GetU32(&header[8]);
  const uint32_t cols = GetU32(&header[12]);
  Matrix m(rows, cols, dtype);
  const int bytes = BitWidth(dtype) / 8;
  std::vector<unsigned char> buf(m.size() * bytes);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  if (static_cast<size_t>(in.gcount()) != buf.size()) {
    throw Error("truncated matrix payload");
  }
  auto data = m.mutable_data();
  for (size_t i = 0; i < data.size(); ++i) {
    uint32_t v = 0;
    for (int b = 0; b < bytes; ++b) v |= uint32_t{buf[i * bytes + b]} << (8 * b);
    data[i] = v;
  }
  return m;
}

void SaveMatrix(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  WriteMatrix(out, m);
}

Matrix LoadMatrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return ReadMatrix(in);
}

std::string PreviewText(const Matrix& m, size_t max_rows, size_t max_cols) {
  std::ostringstream os;
  os << "# " << DTypeName(m.dtype()) << ' ' << m.rows() << 'x' << m.cols()
     << '\n';
  const int hex_digits = m.bit_width() / 4;
  const size_t nr = std::min(m.rows(), max_rows);
  const size_t nc = std::min(m.cols(), max_cols);
  char buf[64];
  for (size_t r = 0; r < nr; ++r) {
    for (size_t c = 0; c < nc; ++c) {
      std::snprintf(buf, sizeof(buf), "%.9g(0x%0*X)", m.value(r, c), hex_digits,
                    m.raw(r, c));
      os << (c ? "\t" : "") << buf;
    }
    if (nc < m.cols()) os << "\t...";
    os << '\n';
  }
  if (nr < m.rows()) os << "...\n";
  return os.str();
}

}  // namespace powerlab
