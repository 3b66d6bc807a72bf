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

#include "powerlab/telemetry.h"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <istream>
#include <mutex>
#include <thread>

#include "powerlab/codec.h"

namespace powerlab {
namespace {

using Clock = std::chrono::system_clock;

int64_t NowEpochMs() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             Clock::now().time_since_epoch())
      .count();
}

std::string_view NextToken(std::string_view& s) {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  };
  size_t b = 0;
  while (b < s.size() && is_space(s[b])) ++b;
  size_t e = b;
  while (e < s.size() && !is_space(s[e])) ++e;
  std::string_view tok = s.substr(b, e - b);
  s.remove_prefix(e);
  return tok;
}

bool ParseInt(std::string_view tok, int64_t& out) {
  if (tok.empty()) return false;
  const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && p == tok.data() + tok.size();
}

// Appends a sample if it is well formed and advances the timestamp.
void Accept(PowerSeries& series, std::string_view line, int64_t offset_ms) {
  ++series.lines_read;
  auto sample = ParsePowerLine(line);
  if (!sample || sample->power_mw < 0) {
    ++series.parse_skips;
    return;
  }
  sample->timestamp_ms -= offset_ms;
  if (!series.samples.empty() &&
      sample->timestamp_ms <= series.samples.back().timestamp_ms) {
    ++series.parse_skips;
    return;
  }
  series.samples.push_back(*sample);
}

std::string Expand(const std::string& tmpl, int64_t interval_ms) {
  std::string out = tmpl;
  const std::string key = "{interval}";
  for (size_t pos = out.find(key); pos != std::string::npos;
       pos = out.find(key, pos)) {
    out.replace(pos, key.size(), std::to_string(interval_ms));
  }
  return out;
}

class StubSampler final : public PowerSampler {
 public:
  StubSampler(std::filesystem::path path, int64_t interval_ms)
      : path_(std::move(path)), interval_ms_(interval_ms), start_(NowEpochMs()) {
    if (!std::filesystem::exists(path_)) {
      throw Error("stub power file " + path_.string() + " does not exist");
    }
  }
  void MarkWorkloadStart() override { start_mark_ = NowEpochMs() - start_; }
  void MarkWorkloadStop() override { stop_mark_ = NowEpochMs() - start_; }
  PowerSeries Stop() override {
    PowerSeries s = LoadStubSeries(path_, interval_ms_);
    if (s.samples.empty()) throw Error("no power samples collected");
    s.workload_start_ms = start_mark_;
    s.workload_stop_ms = stop_mark_;
    return s;
  }

 private:
  std::filesystem::path path_;
  int64_t interval_ms_;
  int64_t start_;
  std::optional<int64_t> start_mark_, stop_mark_;
};

class CommandSampler final : public PowerSampler {
 public:
  CommandSampler(const std::string& command, int64_t interval_ms) {
    series_.source = PowerSource::kExternalCommand;
    series_.interval_ms = interval_ms;
    start_ms_ = NowEpochMs();
    int fds[2];
    if (pipe(fds) != 0) throw Error(std::string("pipe: ") + std::strerror(errno));
    pid_ = fork();
    if (pid_ < 0) {
      close(fds[0]);
      close(fds[1]);
      throw Error(std::string("fork: ") + std::strerror(errno));
    }
    if (pid_ == 0) {
      setpgid(0, 0);
      dup2(fds[1], STDOUT_FILENO);
      close(fds[0]);
      close(fds[1]);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(fds[1]);
    stream_ = fdopen(fds[0], "r");
    if (stream_ == nullptr) {
      close(fds[0]);
      Kill();
      throw Error("cannot read from power command");
    }
    reader_ = std::thread([this] { ReadLoop(); });
  }

  ~CommandSampler() override {
    if (reader_.joinable()) {
      Kill();
      reader_.join();
    }
    if (stream_ != nullptr) fclose(stream_);
  }

  void MarkWorkloadStart() override {
    std::lock_guard lock(mu_);
    series_.workload_start_ms = NowEpochMs() - start_ms_;
  }
  void MarkWorkloadStop() override {
    std::lock_guard lock(mu_);
    series_.workload_stop_ms = NowEpochMs() - start_ms_;
  }

  PowerSeries Stop() override {
    Kill();
    if (reader_.joinable()) reader_.join();
    PowerSeries out;
    {
      std::lock_guard lock(mu_);
      out = std::move(series_);
    }
    if (out.samples.empty()) throw Error("no power samples collected");
    FlagGaps(out);
    return out;
  }

 private:
  void ReadLoop() {
    char buf[512];
    while (fgets(buf, sizeof(buf), stream_) != nullptr) {
      std::lock_guard lock(mu_);
      Accept(series_, buf, start_ms_);
    }
  }

  void Kill() {
    if (pid_ > 0) {
      kill(-pid_, SIGTERM);
      kill(pid_, SIGTERM);
      int status = 0;
      waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }

  pid_t pid_ = -1;
  FILE* stream_ = nullptr;
  int64_t start_ms_ = 0;
  std::mutex mu_;
  PowerSeries series_;
  std::thread reader_;
};

}  // namespace

std::optional<PowerSample> ParsePowerLine(std::string_view line) {
  std::string_view rest = line;
  PowerSample s;
  if (!ParseInt(NextToken(rest), s.timestamp_ms)) return std::nullopt;
  if (!ParseInt(NextToken(rest), s.power_mw)) return std::nullopt;
  if (!NextToken(rest).empty()) return std::nullopt;
  return s;
}

PowerSeries ReadStubSeries(std::istream& in, int64_t interval_ms) {
  if (interval_ms <= 0) throw Error("sample interval must be positive");
  PowerSeries series;
  series.source = PowerSource::kStub;
  series.interval_ms = interval_ms;
  std::string line;
  while (std::getline(in, line)) Accept(series, line, 0);
  FlagGaps(series);
  return series;
}

PowerSeries LoadStubSeries(const std::filesystem::path& path,
                           int64_t interval_ms) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open power stub " + path.string());
  return ReadStubSeries(in, interval_ms);
}

void FlagGaps(PowerSeries& series) {
  series.gaps.clear();
  const int64_t lo = series.interval_ms / 2;
  const int64_t hi = series.interval_ms + series.interval_ms / 2;
  for (size_t i = 1; i < series.samples.size(); ++i) {
    const int64_t d =
        series.samples[i].timestamp_ms - series.samples[i - 1].timestamp_ms;
    if (d < lo || d > hi) series.gaps.push_back(i);
  }
}

PowerSeries Trim(const PowerSeries& series, int64_t warmup_ms) {
  PowerSeries out = series;
  std::erase_if(out.samples, [warmup_ms](const PowerSample& s) {
    return s.timestamp_ms < warmup_ms;
  });
  FlagGaps(out);
  return out;
}

PowerStats TrimAndSummarize(const PowerSeries& series, int64_t warmup_ms) {
  if (series.samples.empty()) throw Error("empty power series");
  const PowerSeries kept = Trim(series, warmup_ms);
  if (kept.samples.empty()) {
    throw Error("warmup of " + std::to_string(warmup_ms) +
                " ms trims every power sample");
  }
  int64_t sum = 0, peak = 0;
  for (const auto& s : kept.samples) {
    sum += s.power_mw;
    peak = std::max(peak, s.power_mw);
  }
  PowerStats stats;
  stats.sample_count = kept.samples.size();
  stats.mean_watts = static_cast<double>(sum) /
                     static_cast<double>(stats.sample_count) / 1000.0;
  stats.max_watts = static_cast<double>(peak) / 1000.0;
  stats.trimmed_duration_ms =
      kept.samples.back().timestamp_ms - kept.samples.front().timestamp_ms;
  return stats;
}

std::unique_ptr<PowerSampler> PowerSampler::Start(
    const std::string& command_template, int64_t interval_ms) {
  if (interval_ms <= 0) throw Error("sample interval must be positive");
  if (command_template.empty()) throw Error("no power command configured");
  constexpr std::string_view kStubPrefix = "stub:";
  if (command_template.starts_with(kStubPrefix)) {
    return std::make_unique<StubSampler>(
        command_template.substr(kStubPrefix.size()), interval_ms);
  }
  return std::make_unique<CommandSampler>(Expand(command_template, interval_ms),
                                          interval_ms);
}

std::string ResolvePowerCommand(const std::string& flag_value,
                                const std::string& config_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv(kPowerCommandEnv); env && *env) return env;
  return config_value;
}

std::chrono::microseconds TimeWorkload(const std::function<void()>& workload) {
  const auto start = std::chrono::high_resolution_clock::now();
  workload();
  const auto stop = std::chrono::high_resolution_clock::now();
  return std::chrono::duration_cast<std::chrono::microseconds>(stop - start);
}

IterationTiming TimeIterations(const std::function<void()>& workload,
                               uint64_t iterations) {
  if (iterations == 0) throw Error("iterations must be >= 1");
  IterationTiming t;
  t.total = TimeWorkload([&] {
    for (uint64_t i = 0; i < iterations; ++i) workload();
  });
  t.per_iteration_us =
      static_cast<double>(t.total.count()) / static_cast<double>(iterations);
  return t;
}

}  // namespace powerlab
