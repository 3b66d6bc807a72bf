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

// Config-driven experiment sweeps: load a suite, run every
// (experiment, dtype, sweep value) point across seeds, aggregate.

#ifndef POWERLAB_EXPERIMENT_H_
#define POWERLAB_EXPERIMENT_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "powerlab/codec.h"
#include "powerlab/matrix.h"
#include "powerlab/patterns.h"

namespace powerlab {

enum class RunMode { kSimulate, kHardware, kBoth };
std::string_view RunModeName(RunMode mode);
RunMode ParseRunMode(std::string_view name);

inline constexpr size_t kDefaultSize = 2048;
inline constexpr int kDefaultSeeds = 10;
inline constexpr uint64_t kDefaultIterations = 10000;
inline constexpr uint64_t kDefaultIterationsFp16T = 20000;

struct Sweep {
  std::string variable;
  std::vector<double> values;
  std::optional<std::vector<double>> values_int8;
  // Values are 0..bit_width of each dtype instead of a fixed list.
  bool bit_range = false;
  // Value lists read off plots rather than tabulated.
  bool approximate = false;

  std::vector<double> ValuesFor(DType dtype) const;
};

struct Experiment {
  std::string name;
  std::vector<std::string> takeaways;  // "T1".."T15"
  PatternSpec base;                    // family, dist, dims, base seeds
  std::optional<Distribution> dist_int8;
  Sweep sweep;
  std::vector<DType> dtypes;
  int seeds = kDefaultSeeds;
  uint64_t iterations = kDefaultIterations;
  uint64_t iterations_fp16t = kDefaultIterationsFp16T;
  RunMode mode = RunMode::kSimulate;

  // Seeds of repetition s are DeriveSeed(seed_a, s) and DeriveSeed(seed_b,
  // s); DeriveSeed is a bijection in its first argument, so they differ.
  PatternSpec SpecFor(DType dtype, double sweep_value, int seed_index) const;
  uint64_t IterationsFor(DType dtype) const;
};

struct ExperimentSuite {
  std::string name;
  std::vector<Experiment> experiments;
  std::string power_cmd;
  int64_t warmup_ms = 500;
  int64_t interval_ms = 100;

  const Experiment& Find(std::string_view name) const;
};

// Parses a JSON suite (format in README). Unknown keys are rejected; parse
// errors carry line and column; semantic errors name the field.
ExperimentSuite ParseConfig(std::string_view text,
                            std::string_view source = "<config>");
ExperimentSuite LoadConfig(const std::filesystem::path& path);
std::filesystem::path BundledConfigPath(std::string_view name = "paper_suite");

struct SuiteOverrides {
  std::optional<size_t> size;
  std::optional<int> seeds;
  std::optional<RunMode> mode;
};
void ApplyOverrides(ExperimentSuite& suite, const SuiteOverrides& o);

struct AuditReport {
  std::map<std::string, std::vector<std::string>> coverage;  // T -> exps
  std::vector<std::string> missing;
  std::vector<std::string> unknown;  // labels outside T1..T15
  bool ok() const { return missing.empty() && unknown.empty(); }
};
AuditReport AuditSuite(const ExperimentSuite& suite);

// Per-seed metrics, in CSV column order.
enum class Metric : size_t {
  kMeanHammingWeightA,
  kMeanHammingWeightB,
  kSparsityA,
  kSparsityB,
  kDistinctValuesA,
  kValueMeanA,
  kValueStdA,
  kAlignment,
  kOperandToggles,
  kAccumulatorToggles,
  kTotalToggles,
  kOutputNonFinite,
  kSaturations,
  kNans,
  kPowerMeanW,
  kPowerMaxW,
  kPowerSamples,
  kRuntimeUs,
  kCount,
};
inline constexpr size_t kMetricCount = static_cast<size_t>(Metric::kCount);
std::string_view MetricName(Metric m);
std::optional<Metric> ParseMetric(std::string_view name);

using MetricValues = std::array<double, kMetricCount>;  // NaN = not measured

struct SeedRecord {
  int seed_index = 0;
  uint64_t seed_a = 0;
  uint64_t seed_b = 0;
  MetricValues metrics{};

  double get(Metric m) const { return metrics[static_cast<size_t>(m)]; }
};

struct ExperimentResult {
  std::string experiment;
  DType dtype = DType::kFP32;
  std::string sweep_variable;
  double sweep_value = 0.0;
  std::vector<SeedRecord> records;
  MetricValues mean{};
  MetricValues stddev{};  // sample (n-1); 0 for a single seed

  // Recomputes mean/stddev from records.
  void Aggregate();
  double mean_of(Metric m) const { return mean[static_cast<size_t>(m)]; }
};

// Runs a kernel `iterations` times on (A, B); the workload measured in
// hardware mode. The default launcher runs the reference GEMM.
using KernelLauncher =
    std::function<void(const Matrix& a, const Matrix& b, uint64_t iterations)>;
KernelLauncher ReferenceKernelLauncher(DType dtype);

struct RunContext {
  std::optional<RunMode> mode;  // overrides each experiment's mode
  std::string power_cmd;        // resolved template; empty = unavailable
  int64_t warmup_ms = 500;
  int64_t interval_ms = 100;
  unsigned threads = 0;
  std::function<void(std::string_view)> warn;
  // Defaults to ReferenceKernelLauncher(dtype).
  std::function<KernelLauncher(DType)> launcher;
};

ExperimentResult RunExperiment(const Experiment& experiment, DType dtype,
                               double sweep_value, const RunContext& ctx);

// Every experiment x dtype x sweep value, in suite order.
std::vector<ExperimentResult> RunSuite(
    const ExperimentSuite& suite, const RunContext& ctx,
    const std::function<void(const ExperimentResult&)>& progress = {});

}  // namespace powerlab

#endif  // POWERLAB_EXPERIMENT_H_
