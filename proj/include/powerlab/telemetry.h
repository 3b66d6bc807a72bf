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

// Power telemetry adapter.
//
// Power comes from an external sampling command whose stdout carries one
// sample per line:
//
//     <epoch_ms> <milliwatts>
//
// e.g. a small wrapper around a vendor monitoring CLI. A command template
// of the form "stub:<path>" replays a recorded file instead, where each
// line is "<timestamp_ms> <power_mw>" relative to the start of sampling.
// Power is stored as integer milliwatts.

#ifndef POWERLAB_TELEMETRY_H_
#define POWERLAB_TELEMETRY_H_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace powerlab {

inline constexpr int64_t kDefaultSampleIntervalMs = 100;
inline constexpr int64_t kDefaultWarmupMs = 500;
inline constexpr const char* kPowerCommandEnv = "POWERLAB_POWER_CMD";

struct PowerSample {
  int64_t timestamp_ms = 0;  // since sampler start
  int64_t power_mw = 0;
  friend bool operator==(const PowerSample&, const PowerSample&) = default;
};

enum class PowerSource { kExternalCommand, kStub };

struct PowerSeries {
  std::vector<PowerSample> samples;  // strictly increasing timestamps
  PowerSource source = PowerSource::kStub;
  int64_t interval_ms = kDefaultSampleIntervalMs;
  uint64_t lines_read = 0;
  uint64_t parse_skips = 0;  // malformed, negative or out-of-order lines
  // Indices i whose spacing to sample i-1 is outside 50%..150% of interval.
  std::vector<size_t> gaps;
  // Workload window in the same clock as the samples, if recorded.
  std::optional<int64_t> workload_start_ms;
  std::optional<int64_t> workload_stop_ms;
};

// Parses "<timestamp> <milliwatts>" (whitespace separated, integers).
std::optional<PowerSample> ParsePowerLine(std::string_view line);

// Reads a stub file. Lines that fail to parse, carry negative power, or do
// not advance the timestamp are skipped and counted.
PowerSeries ReadStubSeries(std::istream& in,
                           int64_t interval_ms = kDefaultSampleIntervalMs);
PowerSeries LoadStubSeries(const std::filesystem::path& path,
                           int64_t interval_ms = kDefaultSampleIntervalMs);

void FlagGaps(PowerSeries& series);

struct PowerStats {
  double mean_watts = 0.0;
  double max_watts = 0.0;
  size_t sample_count = 0;
  // Span between the first and last retained sample.
  int64_t trimmed_duration_ms = 0;
};

// Drops samples with timestamp < warmup_ms.
PowerSeries Trim(const PowerSeries& series, int64_t warmup_ms);
// Trim, then mean/max of what is left. Throws if nothing remains.
PowerStats TrimAndSummarize(const PowerSeries& series,
                            int64_t warmup_ms = kDefaultWarmupMs);

// Runs a power sampling command for the lifetime of the object. Lines are
// collected by a reader thread; the series is only handed out by Stop().
class PowerSampler {
 public:
  virtual ~PowerSampler() = default;

  // "{interval}" in the template is replaced with the interval in ms.
  static std::unique_ptr<PowerSampler> Start(const std::string& command_template,
                                             int64_t interval_ms);

  virtual void MarkWorkloadStart() = 0;
  virtual void MarkWorkloadStop() = 0;
  // Stops sampling and returns the series. Throws if no sample was seen.
  virtual PowerSeries Stop() = 0;
};

// Flag value if non-empty, else the environment override, else the
// configured template. Empty result means hardware sampling is unavailable.
std::string ResolvePowerCommand(const std::string& flag_value,
                                const std::string& config_value);

std::chrono::microseconds TimeWorkload(const std::function<void()>& workload);

struct IterationTiming {
  std::chrono::microseconds total{0};
  double per_iteration_us = 0.0;
};
IterationTiming TimeIterations(const std::function<void()>& workload,
                               uint64_t iterations);

}  // namespace powerlab

#endif  // POWERLAB_TELEMETRY_H_
