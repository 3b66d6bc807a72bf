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

// powerlab: generate input patterns, run sweeps, analyze matrices and
// turn result CSVs into plot data.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "powerlab/experiment.h"
#include "powerlab/gemm.h"
#include "powerlab/matrix.h"
#include "powerlab/metrics.h"
#include "powerlab/report.h"
#include "powerlab/telemetry.h"

namespace fs = std::filesystem;
using namespace powerlab;

namespace {

struct SuiteFlags {
  std::string config;
  std::optional<size_t> size;
  std::optional<int> seeds;
  std::string mode;

  ExperimentSuite Load() const {
    ExperimentSuite s =
        LoadConfig(config.empty() ? BundledConfigPath() : fs::path(config));
    SuiteOverrides o;
    o.size = size;
    o.seeds = seeds;
    if (!mode.empty()) o.mode = ParseRunMode(mode);
    ApplyOverrides(s, o);
    return s;
  }
};

void AddSuiteFlags(CLI::App* cmd, SuiteFlags& f) {
  cmd->add_option("--config", f.config, "Suite config (default: bundled paper_suite)");
  cmd->add_option("--size", f.size, "Override matrix size N (N x N)");
  cmd->add_option("--seeds", f.seeds, "Override seeds per point");
}

void PrintSummary(const std::string& label, const Matrix& m) {
  const MatrixSummary s = Summarize(m);
  std::printf("%s: %s %zux%zu  hw=%.4f  sparsity=%.4f  mean=%.6g  std=%.6g  "
              "distinct=%llu  saturations=%llu  nans=%llu\n",
              label.c_str(), std::string(DTypeName(m.dtype())).c_str(), m.rows(),
              m.cols(), s.mean_hamming_weight, s.sparsity_fraction, s.value_mean,
              s.value_std, static_cast<unsigned long long>(s.distinct_value_count),
              static_cast<unsigned long long>(s.saturations),
              static_cast<unsigned long long>(s.nans));
}

ExperimentSuite Filter(ExperimentSuite suite, const std::vector<std::string>& names,
                       const std::vector<std::string>& dtypes) {
  if (!names.empty()) {
    std::vector<Experiment> kept;
    for (const auto& n : names) kept.push_back(suite.Find(n));
    suite.experiments = std::move(kept);
  }
  if (!dtypes.empty()) {
    std::vector<DType> want;
    for (const auto& d : dtypes) want.push_back(ParseDType(d));
    for (auto& e : suite.experiments) {
      std::vector<DType> kept;
      for (DType t : e.dtypes) {
        if (std::find(want.begin(), want.end(), t) != want.end()) kept.push_back(t);
      }
      e.dtypes = std::move(kept);
    }
  }
  return suite;
}

int Generate(const SuiteFlags& flags, const std::string& experiment,
             const std::string& dtype_name, std::optional<double> value,
             int seed_index, const std::string& out) {
  const ExperimentSuite suite = flags.Load();
  const Experiment& e = suite.Find(experiment);
  const DType dtype = ParseDType(dtype_name);
  const auto values = e.sweep.ValuesFor(dtype);
  const double x = value.value_or(values.front());
  const PatternSpec spec = e.SpecFor(dtype, x, seed_index);
  const PatternPair pair = BuildPatternPair(spec);
  fs::create_directories(out);
  const fs::path a = fs::path(out) / "A.plmx";
  const fs::path b = fs::path(out) / "B.plmx";
  SaveMatrix(a, pair.a);
  SaveMatrix(b, pair.b);
  std::printf("%s %s %s=%s seed_a=%llu seed_b=%llu\n", e.name.c_str(),
              std::string(DTypeName(dtype)).c_str(), e.sweep.variable.c_str(),
              FormatNumber(x).c_str(), static_cast<unsigned long long>(spec.seed_a),
              static_cast<unsigned long long>(spec.seed_b));
  PrintSummary(a.string(), pair.a);
  PrintSummary(b.string(), pair.b);
  return 0;
}

int Analyze(const std::vector<std::string>& paths, bool simulate, unsigned threads) {
  std::vector<Matrix> ms;
  for (const auto& p : paths) {
    ms.push_back(LoadMatrix(p));
    PrintSummary(p, ms.back());
  }
  if (ms.size() == 2) {
    const AlignmentCount c = PairwiseAlignmentCounts(ms[0], ms[1]);
    std::printf("alignment: %.6f (%llu differing bits over %llu pairs)\n", c.alignment(),
                static_cast<unsigned long long>(c.differing_bits),
                static_cast<unsigned long long>(c.pairs));
    if (simulate) {
      SwitchingOptions opts;
      opts.threads = threads;
      const auto sim =
          Simulate(ms[0], ms[1], ArithmeticPolicy::For(ms[0].dtype()), opts);
      std::printf("toggles: operand_a=%llu operand_b=%llu accumulator=%llu total=%llu\n",
                  static_cast<unsigned long long>(sim.toggles.operand_a_toggles),
                  static_cast<unsigned long long>(sim.toggles.operand_b_toggles),
                  static_cast<unsigned long long>(sim.toggles.accumulator_toggles),
                  static_cast<unsigned long long>(sim.toggles.total_toggles()));
    }
  } else if (simulate) {
    throw Error("--simulate needs exactly two matrices (A then B)");
  }
  return 0;
}

void EmitPlots(const std::vector<ExperimentResult>& results, const fs::path& dir,
               const std::string& metric) {
  for (auto kind : {PlotKind::kSweepLines, PlotKind::kAlignmentScatter}) {
    const auto files = EmitPlotData(results, kind,
                                    dir / (std::string(PlotKindName(kind)) + ".tsv"), metric);
    std::fprintf(stderr, "wrote %s and %s\n", files.data.c_str(), files.svg.c_str());
  }
}

int Run(const SuiteFlags& flags, const std::vector<std::string>& names,
        const std::vector<std::string>& dtypes, const std::string& out,
        const std::string& power_cmd, unsigned threads, bool quiet) {
  const ExperimentSuite suite = Filter(flags.Load(), names, dtypes);
  RunContext ctx;
  if (!flags.mode.empty()) ctx.mode = ParseRunMode(flags.mode);
  ctx.power_cmd = ResolvePowerCommand(power_cmd, suite.power_cmd);
  ctx.warmup_ms = suite.warmup_ms;
  ctx.interval_ms = suite.interval_ms;
  ctx.threads = threads;
  bool warned = false;
  ctx.warn = [&warned](std::string_view msg) {
    if (!warned) std::fprintf(stderr, "warning: %.*s\n", static_cast<int>(msg.size()), msg.data());
    warned = true;
  };
  const auto results = RunSuite(suite, ctx, [quiet](const ExperimentResult& r) {
    if (quiet) return;
    std::fprintf(stderr, "%-20s %-5s %s=%-8s toggles=%s\n", r.experiment.c_str(),
                 std::string(DTypeName(r.dtype)).c_str(), r.sweep_variable.c_str(),
                 FormatNumber(r.sweep_value).c_str(),
                 FormatNumber(r.mean_of(Metric::kTotalToggles)).c_str());
  });
  fs::create_directories(out);
  const fs::path csv = fs::path(out) / "results.csv";
  EmitCsv(results, csv);
  std::fprintf(stderr, "wrote %s (%zu points)\n", csv.c_str(), results.size());
  EmitPlots(results, out, "auto");
  return 0;
}

int Report(const std::string& csv, const std::string& kind, const std::string& metric,
           const std::string& out) {
  const auto results = LoadCsv(csv);
  if (kind.empty()) {
    fs::create_directories(out);
    EmitPlots(results, out, metric);
    return 0;
  }
  const PlotKind k = ParsePlotKind(kind);
  fs::create_directories(out);
  const auto files =
      EmitPlotData(results, k, fs::path(out) / (std::string(PlotKindName(k)) + ".tsv"), metric);
  std::fprintf(stderr, "wrote %s and %s\n", files.data.c_str(), files.svg.c_str());
  return 0;
}

int Audit(const SuiteFlags& flags) {
  const ExperimentSuite suite = flags.Load();
  const AuditReport r = AuditSuite(suite);
  for (int t = 1; t <= 15; ++t) {
    const std::string label = "T" + std::to_string(t);
    std::printf("%-4s", label.c_str());
    const auto it = r.coverage.find(label);
    if (it == r.coverage.end()) {
      std::printf("MISSING\n");
      continue;
    }
    for (const auto& e : it->second) std::printf(" %s", e.c_str());
    std::printf("\n");
  }
  for (const auto& u : r.unknown) std::printf("unknown label: %s\n", u.c_str());
  std::printf("%s: %zu experiments, %s\n", suite.name.c_str(), suite.experiments.size(),
              r.ok() ? "T1-T15 covered" : "coverage incomplete");
  return r.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"powerlab: input-dependent GEMM power laboratory"};
  app.require_subcommand(1);

  SuiteFlags gen_flags, run_flags, audit_flags;
  std::string experiment, dtype = "FP16", out = "out", power_cmd, csv, kind, metric = "auto";
  std::vector<std::string> names, dtypes, paths;
  std::optional<double> value;
  int seed_index = 0;
  unsigned threads = 0;
  bool quiet = false, simulate = false;

  auto* gen = app.add_subcommand("generate", "Build and save one (A, B) pair");
  AddSuiteFlags(gen, gen_flags);
  gen->add_option("--experiment", experiment, "Experiment name")->required();
  gen->add_option("--dtype", dtype, "FP32, FP16, FP16T or INT8");
  gen->add_option("--value", value, "Sweep value (default: first)");
  gen->add_option("--seed-index", seed_index, "Repetition index")->check(CLI::NonNegativeNumber);
  gen->add_option("--out", out, "Output directory");

  auto* run = app.add_subcommand("run", "Run the suite and write results.csv");
  AddSuiteFlags(run, run_flags);
  run->add_option("--mode", run_flags.mode, "simulate, hardware or both")
      ->check(CLI::IsMember({"simulate", "hardware", "both"}));
  run->add_option("--out", out, "Output directory");
  run->add_option("--power-cmd", power_cmd, "Power sampling command template");
  run->add_option("--experiment", names, "Only these experiments");
  run->add_option("--dtype", dtypes, "Only these dtypes");
  run->add_option("--threads", threads, "Simulator threads (0 = all cores)");
  run->add_flag("--quiet", quiet, "No per-point progress");

  auto* analyze = app.add_subcommand("analyze", "Metrics over saved matrices");
  analyze->add_option("matrices", paths, "Matrix files (A [B])")->required()->check(CLI::ExistingFile);
  analyze->add_flag("--simulate", simulate, "Also count toggles for A x B");
  analyze->add_option("--threads", threads, "Simulator threads (0 = all cores)");

  auto* report = app.add_subcommand("report", "Turn a results CSV into plot data");
  report->add_option("--csv", csv, "results.csv from run")->required()->check(CLI::ExistingFile);
  report->add_option("--kind", kind, "sweep_lines or alignment_scatter (default: both)");
  report->add_option("--metric", metric, "Metric column, or auto");
  report->add_option("--out", out, "Output directory");

  auto* audit = app.add_subcommand("audit", "Check takeaway coverage of a suite");
  AddSuiteFlags(audit, audit_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return Generate(gen_flags, experiment, dtype, value, seed_index, out);
    if (*run) return Run(run_flags, names, dtypes, out, power_cmd, threads, quiet);
    if (*analyze) return Analyze(paths, simulate, threads);
    if (*report) return Report(csv, kind, metric, out);
    if (*audit) return Audit(audit_flags);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
