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

// Result serialization: the experiment CSV and plot-ready data.
//
// CSV columns, in order:
//   experiment,dtype,sweep_variable,sweep_value,kind,seed_index,seed_a,seed_b
// then for every metric M (see Metric): M,M_std
// `kind` is "seed" for per-seed rows (M_std empty) or "aggregate" for the
// cross-seed row that follows them (M = mean, M_std = sample deviation).
// Unmeasured values are empty fields. Doubles use the shortest decimal
// form that round-trips.

#ifndef POWERLAB_REPORT_H_
#define POWERLAB_REPORT_H_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "powerlab/experiment.h"

namespace powerlab {

std::string FormatNumber(double v);

void WriteCsv(std::ostream& out, const std::vector<ExperimentResult>& results);
// Throws (and writes nothing) on empty results.
void EmitCsv(const std::vector<ExperimentResult>& results,
             const std::filesystem::path& path);

std::vector<ExperimentResult> ReadCsv(std::istream& in);
std::vector<ExperimentResult> LoadCsv(const std::filesystem::path& path);

enum class PlotKind { kSweepLines, kAlignmentScatter };
std::string_view PlotKindName(PlotKind kind);
PlotKind ParsePlotKind(std::string_view name);

// "auto" picks power_mean_w when any result has it, else total_toggles.
Metric ResolvePlotMetric(const std::vector<ExperimentResult>& results,
                         std::string_view metric);

struct PlotFiles {
  std::filesystem::path data;  // tab-separated columns
  std::filesystem::path svg;
};

// sweep_lines: per experiment and dtype, rows "x y_mean y_std".
// alignment_scatter: one row per configuration with its mean alignment,
// mean Hamming weight of A, and the metric.
// `path` names the data file; the SVG goes next to it with extension .svg.
PlotFiles EmitPlotData(const std::vector<ExperimentResult>& results,
                       PlotKind kind, const std::filesystem::path& path,
                       std::string_view metric = "auto");

}  // namespace powerlab

#endif  // POWERLAB_REPORT_H_
