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

#include <gtest/gtest.h>
#include <stdlib.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "powerlab/codec.h"
#include "powerlab/telemetry.h"

namespace powerlab {
namespace {

namespace fs = std::filesystem;

std::string Series(int count, int spacing, int start = 0, int mw = 250000) {
  std::ostringstream s;
  for (int i = 0; i < count; ++i) s << start + i * spacing << ' ' << mw + i << '\n';
  return s.str();
}

fs::path WriteTemp(const std::string& name, const std::string& body) {
  const fs::path p = fs::temp_directory_path() / ("powerlab_" + name);
  std::ofstream(p) << body;
  return p;
}

TEST(ParsePowerLine, Contract) {
  EXPECT_EQ(ParsePowerLine("1700000000000 250000"), (PowerSample{1700000000000, 250000}));
  EXPECT_EQ(ParsePowerLine("  5\t7  "), (PowerSample{5, 7}));
  EXPECT_FALSE(ParsePowerLine("5"));
  EXPECT_FALSE(ParsePowerLine("5 7 9"));
  EXPECT_FALSE(ParsePowerLine("5 7.5"));
  EXPECT_FALSE(ParsePowerLine("abc 7"));
  EXPECT_FALSE(ParsePowerLine(""));
}

TEST(StubSeries, SkipsAreCounted) {
  std::string body = Series(99, 100);
  body.insert(body.find('\n') + 1, "garbage line\n");
  std::istringstream in(body);
  const PowerSeries s = ReadStubSeries(in);
  EXPECT_EQ(s.samples.size(), 99u);
  EXPECT_EQ(s.parse_skips, 1u);
  EXPECT_EQ(s.lines_read, 100u);
}

TEST(StubSeries, NegativeAndBackwardsRejected) {
  std::istringstream in("0 10\n100 -5\n100 10\n50 10\n200 10\n200 11\n");
  const PowerSeries s = ReadStubSeries(in);
  EXPECT_EQ(s.samples.size(), 3u);
  EXPECT_EQ(s.parse_skips, 3u);
  EXPECT_EQ(s.lines_read, 6u);
}

TEST(StubSeries, GapsFlagged) {
  std::istringstream in("0 1\n100 1\n400 1\n430 1\n530 1\n");
  const PowerSeries s = ReadStubSeries(in, 100);
  EXPECT_EQ(s.gaps, (std::vector<size_t>{2, 3}));
}

TEST(Trim, DropsFirstWarmup) {
  std::istringstream in(Series(10, 100));
  const PowerSeries s = ReadStubSeries(in);
  const PowerSeries t = Trim(s, 500);
  ASSERT_EQ(t.samples.size(), 5u);
  EXPECT_EQ(t.samples.front().timestamp_ms, 500);
  const PowerStats st = TrimAndSummarize(s, 500);
  EXPECT_EQ(st.sample_count, 5u);
  EXPECT_DOUBLE_EQ(st.mean_watts, 250.007);
  EXPECT_DOUBLE_EQ(st.max_watts, 250.009);
  EXPECT_EQ(st.trimmed_duration_ms, 400);
  EXPECT_THROW(TrimAndSummarize(s, 10000), Error);
  EXPECT_THROW(TrimAndSummarize(PowerSeries{}, 0), Error);
}

TEST(Sampler, StubReplayDeterministic) {
  const fs::path p = WriteTemp("stub.txt", Series(20, 100));
  auto first = PowerSampler::Start("stub:" + p.string(), 100);
  first->MarkWorkloadStart();
  first->MarkWorkloadStop();
  const PowerSeries a = first->Stop();
  const PowerSeries b = PowerSampler::Start("stub:" + p.string(), 100)->Stop();
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_TRUE(a.workload_start_ms.has_value());
  EXPECT_EQ(a.source, PowerSource::kStub);
  EXPECT_THROW(PowerSampler::Start("stub:/nonexistent/file", 100), Error);
}

TEST(Sampler, ExternalCommand) {
  // A shell loop standing in for a vendor monitoring tool.
  const std::string cmd =
      "i=0; while true; do echo \"$(date +%s%3N) $((100000 + i))\"; i=$((i+1)); "
      "sleep 0.0{interval}; done";
  auto s = PowerSampler::Start(cmd, 20);
  s->MarkWorkloadStart();
  std::this_thread::sleep_for(std::chrono::milliseconds(300));
  s->MarkWorkloadStop();
  const PowerSeries series = s->Stop();
  EXPECT_EQ(series.source, PowerSource::kExternalCommand);
  EXPECT_GE(series.samples.size(), 3u);
  EXPECT_EQ(series.parse_skips, 0u);
  for (size_t i = 1; i < series.samples.size(); ++i) {
    EXPECT_GT(series.samples[i].timestamp_ms, series.samples[i - 1].timestamp_ms);
  }
  EXPECT_THROW(PowerSampler::Start("", 100), Error);
}

TEST(Sampler, SilentCommandFails) {
  auto s = PowerSampler::Start("true", 100);
  EXPECT_THROW(s->Stop(), Error);
}

TEST(ResolvePowerCommand, Precedence) {
  unsetenv(kPowerCommandEnv);
  EXPECT_EQ(ResolvePowerCommand("", "cfg"), "cfg");
  setenv(kPowerCommandEnv, "env", 1);
  EXPECT_EQ(ResolvePowerCommand("", "cfg"), "env");
  EXPECT_EQ(ResolvePowerCommand("flag", "cfg"), "flag");
  unsetenv(kPowerCommandEnv);
}

TEST(Timing, Iterations) {
  int calls = 0;
  const IterationTiming t = TimeIterations([&] { ++calls; }, 7);
  EXPECT_EQ(calls, 7);
  EXPECT_GE(t.per_iteration_us, 0.0);
  EXPECT_THROW(TimeIterations([] {}, 0), Error);
}

}  // namespace
}  // namespace powerlab
