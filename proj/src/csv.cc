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

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "powerlab/report.h"

namespace powerlab {
namespace {

constexpr std::string_view kFixedColumns[] = {
    "experiment", "dtype",    "sweep_variable", "sweep_value",
    "kind",       "seed_index", "seed_a",       "seed_b"};

std::string Header() {
  std::string h;
  for (auto c : kFixedColumns) {
    if (!h.empty()) h += ',';
    h += c;
  }
  for (size_t k = 0; k < kMetricCount; ++k) {
    const auto name = MetricName(static_cast<Metric>(k));
    h += ',';
    h += name;
    h += ',';
    h += name;
    h += "_std";
  }
  return h;
}

// Names are restricted to [A-Za-z0-9_-] by the config parser, so no
// quoting is ever needed; reject anything that would break the format.
const std::string& Field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") != std::string::npos) {
    throw Error("CSV field contains a separator: " + s);
  }
  return s;
}

std::vector<std::string> SplitRow(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  for (;;) {
    const size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') {
    out.back().pop_back();
  }
  return out;
}

double ParseNumber(const std::string& s, size_t line) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw Error("CSV line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

uint64_t ParseUnsigned(const std::string& s, size_t line) {
  uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
    throw Error("CSV line " + std::to_string(line) + ": bad integer '" + s + "'");
  }
  return v;
}

}  // namespace

std::string FormatNumber(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

void WriteCsv(std::ostream& out, const std::vector<ExperimentResult>& results) {
  out << Header() << '\n';
  for (const auto& r : results) {
    const std::string prefix = Field(r.experiment) + ',' +
                               std::string(DTypeName(r.dtype)) + ',' +
                               Field(r.sweep_variable) + ',' +
                               FormatNumber(r.sweep_value);
    for (const auto& rec : r.records) {
      out << prefix << ",seed," << rec.seed_index << ',' << rec.seed_a << ','
          << rec.seed_b;
      for (double v : rec.metrics) out << ',' << FormatNumber(v) << ',';
      out << '\n';
    }
    out << prefix << ",aggregate,,,";
    for (size_t k = 0; k < kMetricCount; ++k) {
      out << ',' << FormatNumber(r.mean[k]) << ',' << FormatNumber(r.stddev[k]);
    }
    out << '\n';
  }
}

void EmitCsv(const std::vector<ExperimentResult>& results,
             const std::filesystem::path& path) {
  if (results.empty()) throw Error("no results to write");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  WriteCsv(out, results);
  out.flush();
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<ExperimentResult> ReadCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != Header()) throw Error("CSV header does not match this version");
  const size_t width = 8 + 2 * kMetricCount;

  std::vector<ExperimentResult> out;
  bool open = false;  // last result still collecting seed rows
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = SplitRow(line);
    if (f.size() != width) {
      throw Error("CSV line " + std::to_string(lineno) + ": expected " +
                  std::to_string(width) + " fields, got " +
                  std::to_string(f.size()));
    }
    const DType dtype = ParseDType(f[1]);
    const double x = ParseNumber(f[3], lineno);
    if (!open || out.back().experiment != f[0] || out.back().dtype != dtype ||
        out.back().sweep_value != x) {
      ExperimentResult r;
      r.experiment = f[0];
      r.dtype = dtype;
      r.sweep_variable = f[2];
      r.sweep_value = x;
      out.push_back(std::move(r));
      open = true;
    }
    ExperimentResult& r = out.back();
    if (f[4] == "seed") {
      SeedRecord rec;
      rec.seed_index = static_cast<int>(ParseUnsigned(f[5], lineno));
      rec.seed_a = ParseUnsigned(f[6], lineno);
      rec.seed_b = ParseUnsigned(f[7], lineno);
      for (size_t k = 0; k < kMetricCount; ++k) {
        rec.metrics[k] = ParseNumber(f[8 + 2 * k], lineno);
      }
      r.records.push_back(rec);
    } else if (f[4] == "aggregate") {
      for (size_t k = 0; k < kMetricCount; ++k) {
        r.mean[k] = ParseNumber(f[8 + 2 * k], lineno);
        r.stddev[k] = ParseNumber(f[9 + 2 * k], lineno);
      }
      open = false;
    } else {
      throw Error("CSV line " + std::to_string(lineno) + ": unknown kind '" +
                  f[4] + "'");
    }
  }
  if (open) throw Error("CSV ends without an aggregate row");
  return out;
}

std::vector<ExperimentResult> LoadCsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return ReadCsv(in);
}

}  // namespace powerlab
