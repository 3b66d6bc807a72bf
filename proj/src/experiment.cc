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

#include "powerlab/experiment.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "powerlab/gemm.h"
#include "powerlab/metrics.h"
#include "powerlab/rng.h"
#include "powerlab/telemetry.h"

namespace powerlab {
namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Field path used in error messages, e.g. "experiments[2].sweep.values".
class Path {
 public:
  explicit Path(std::string p) : p_(std::move(p)) {}
  Path operator/(std::string_view key) const {
    return Path(p_.empty() ? std::string(key) : p_ + "." + std::string(key));
  }
  Path operator[](size_t i) const {
    return Path(p_ + "[" + std::to_string(i) + "]");
  }
  const std::string& str() const { return p_; }

 private:
  std::string p_;
};

[[noreturn]] void Fail(const Path& at, const std::string& what) {
  throw Error("config field '" + at.str() + "': " + what);
}

void CheckKeys(const json& obj, const Path& at,
               const std::vector<std::string_view>& allowed) {
  if (!obj.is_object()) Fail(at, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      Fail(at / key, "unknown key");
    }
  }
}

double GetNumber(const json& v, const Path& at) {
  if (!v.is_number()) Fail(at, "expected a number");
  return v.get<double>();
}

int64_t GetInteger(const json& v, const Path& at, int64_t min) {
  if (!v.is_number_integer()) Fail(at, "expected an integer");
  const auto x = v.get<int64_t>();
  if (x < min) Fail(at, "must be >= " + std::to_string(min));
  return x;
}

std::string GetString(const json& v, const Path& at) {
  if (!v.is_string()) Fail(at, "expected a string");
  return v.get<std::string>();
}

bool GetBool(const json& v, const Path& at) {
  if (!v.is_boolean()) Fail(at, "expected true or false");
  return v.get<bool>();
}

template <class F>
auto Guard(const Path& at, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    Fail(at, e.what());
  }
}

Distribution ParseDist(const json& j, const Path& at, Distribution d) {
  CheckKeys(j, at, {"mean", "std"});
  if (j.contains("mean")) d.mean = GetNumber(j["mean"], at / "mean");
  if (j.contains("std")) d.std = GetNumber(j["std"], at / "std");
  if (!(d.std >= 0)) Fail(at / "std", "must be >= 0");
  return d;
}

std::vector<double> ParseValues(const json& j, const Path& at) {
  if (!j.is_array() || j.empty()) Fail(at, "expected a non-empty array");
  std::vector<double> out;
  for (size_t i = 0; i < j.size(); ++i) out.push_back(GetNumber(j[i], at[i]));
  return out;
}

std::vector<DType> ParseDTypes(const json& j, const Path& at) {
  if (!j.is_array() || j.empty()) Fail(at, "expected a non-empty array");
  std::vector<DType> out;
  for (size_t i = 0; i < j.size(); ++i) {
    const DType t = Guard(at[i], [&] { return ParseDType(GetString(j[i], at[i])); });
    if (std::find(out.begin(), out.end(), t) != out.end()) {
      Fail(at[i], "duplicate dtype");
    }
    out.push_back(t);
  }
  return out;
}

FamilyParams ParseFamily(const std::string& family, const json* params,
                         const Path& at) {
  FamilyParams fp = Guard(at / "family", [&] { return MakeFamily(family); });
  if (params == nullptr) return fp;
  const Path p = at / "params";
  std::visit(
      [&](auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, GaussianParams>) {
          CheckKeys(*params, p, {});
        } else if constexpr (std::is_same_v<T, SetDrawParams>) {
          CheckKeys(*params, p, {"set_size"});
          if (params->contains("set_size")) {
            v.set_size = static_cast<size_t>(
                GetInteger((*params)["set_size"], p / "set_size", 1));
          }
        } else if constexpr (std::is_same_v<T, ConstantPerturbedParams> ||
                             std::is_same_v<T, BitSparsityParams>) {
          CheckKeys(*params, p, {"mode", "bits"});
          if (params->contains("mode")) {
            v.mode = Guard(p / "mode", [&] {
              return ParsePerturbMode(GetString((*params)["mode"], p / "mode"));
            });
          }
          if (params->contains("bits")) {
            v.bits = static_cast<int>(GetInteger((*params)["bits"], p / "bits", 0));
          }
        } else if constexpr (std::is_same_v<T, PlacementParams>) {
          CheckKeys(*params, p, {"axis", "percent", "align_b"});
          if (params->contains("axis")) {
            v.axis = Guard(p / "axis", [&] {
              return ParseSortAxis(GetString((*params)["axis"], p / "axis"));
            });
          }
          if (params->contains("percent")) {
            v.percent = GetNumber((*params)["percent"], p / "percent");
          }
          if (params->contains("align_b")) {
            v.align_b = GetBool((*params)["align_b"], p / "align_b");
          }
        } else if constexpr (std::is_same_v<T, SparsityParams>) {
          CheckKeys(*params, p, {"fraction", "presort"});
          if (params->contains("fraction")) {
            v.fraction = GetNumber((*params)["fraction"], p / "fraction");
          }
          if (params->contains("presort")) {
            v.presort = GetBool((*params)["presort"], p / "presort");
          }
        }
      },
      fp);
  return fp;
}

Sweep ParseSweep(const json& j, const Path& at) {
  CheckKeys(j, at, {"variable", "values", "values_int8", "approximate"});
  Sweep s;
  if (!j.contains("variable")) Fail(at / "variable", "required");
  s.variable = GetString(j["variable"], at / "variable");
  if (!j.contains("values")) Fail(at / "values", "required");
  const json& v = j["values"];
  if (v.is_string()) {
    if (v.get<std::string>() != "0..width") {
      Fail(at / "values", "the only range form is \"0..width\"");
    }
    s.bit_range = true;
  } else {
    s.values = ParseValues(v, at / "values");
  }
  if (j.contains("values_int8")) {
    s.values_int8 = ParseValues(j["values_int8"], at / "values_int8");
  }
  if (j.contains("approximate")) {
    s.approximate = GetBool(j["approximate"], at / "approximate");
  }
  return s;
}

struct Defaults {
  size_t size = kDefaultSize;
  int seeds = kDefaultSeeds;
  uint64_t seed_a = 1;
  uint64_t seed_b = 2;
  uint64_t iterations = kDefaultIterations;
  uint64_t iterations_fp16t = kDefaultIterationsFp16T;
  RunMode mode = RunMode::kSimulate;
  std::vector<DType> dtypes{kAllDTypes.begin(), kAllDTypes.end()};
  Distribution dist;
  std::optional<Distribution> dist_int8;
};

// Keys shared by "defaults" and each experiment.
void ParseCommon(const json& j, const Path& at, Defaults& d) {
  if (j.contains("size")) d.size = static_cast<size_t>(GetInteger(j["size"], at / "size", 1));
  if (j.contains("seeds")) d.seeds = static_cast<int>(GetInteger(j["seeds"], at / "seeds", 1));
  if (j.contains("seed_a")) d.seed_a = static_cast<uint64_t>(GetInteger(j["seed_a"], at / "seed_a", 0));
  if (j.contains("seed_b")) d.seed_b = static_cast<uint64_t>(GetInteger(j["seed_b"], at / "seed_b", 0));
  if (j.contains("iterations")) {
    d.iterations = static_cast<uint64_t>(GetInteger(j["iterations"], at / "iterations", 1));
  }
  if (j.contains("iterations_fp16t")) {
    d.iterations_fp16t = static_cast<uint64_t>(
        GetInteger(j["iterations_fp16t"], at / "iterations_fp16t", 1));
  }
  if (j.contains("mode")) {
    d.mode = Guard(at / "mode", [&] { return ParseRunMode(GetString(j["mode"], at / "mode")); });
  }
  if (j.contains("dtypes")) d.dtypes = ParseDTypes(j["dtypes"], at / "dtypes");
  if (j.contains("dist")) d.dist = ParseDist(j["dist"], at / "dist", d.dist);
  if (j.contains("dist_int8")) {
    d.dist_int8 = ParseDist(j["dist_int8"], at / "dist_int8",
                            d.dist_int8.value_or(d.dist));
  }
}

const std::vector<std::string_view> kCommonKeys = {
    "size", "seeds", "seed_a", "seed_b", "iterations", "iterations_fp16t",
    "mode", "dtypes", "dist", "dist_int8"};

bool ValidName(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

Experiment ParseExperiment(const json& j, const Path& at, Defaults d) {
  std::vector<std::string_view> keys = kCommonKeys;
  for (auto k : {"name", "takeaways", "family", "params", "sweep", "note"}) {
    keys.push_back(k);
  }
  CheckKeys(j, at, keys);
  ParseCommon(j, at, d);

  Experiment e;
  if (!j.contains("name")) Fail(at / "name", "required");
  e.name = GetString(j["name"], at / "name");
  if (!ValidName(e.name)) Fail(at / "name", "use letters, digits, '_' or '-'");
  if (j.contains("takeaways")) {
    const json& t = j["takeaways"];
    if (!t.is_array()) Fail(at / "takeaways", "expected an array");
    for (size_t i = 0; i < t.size(); ++i) {
      e.takeaways.push_back(GetString(t[i], at / "takeaways"));
    }
  }
  if (!j.contains("family")) Fail(at / "family", "required");
  e.base.family = ParseFamily(GetString(j["family"], at / "family"),
                              j.contains("params") ? &j["params"] : nullptr, at);
  e.base.dist = d.dist;
  e.dist_int8 = d.dist_int8;
  e.base.rows = e.base.inner = e.base.cols = d.size;
  e.base.seed_a = d.seed_a;
  e.base.seed_b = d.seed_b;
  if (d.seed_a == d.seed_b) {
    Fail(at / "seed_b", "A and B must use different seeds (seed_a == seed_b)");
  }
  e.dtypes = d.dtypes;
  e.seeds = d.seeds;
  e.iterations = d.iterations;
  e.iterations_fp16t = d.iterations_fp16t;
  e.mode = d.mode;
  if (!j.contains("sweep")) Fail(at / "sweep", "required");
  e.sweep = ParseSweep(j["sweep"], at / "sweep");

  // Every point must build a valid spec.
  for (DType t : e.dtypes) {
    for (double v : e.sweep.ValuesFor(t)) {
      Guard(at / "sweep", [&] {
        e.SpecFor(t, v, 0).Validate();
        return 0;
      });
    }
  }
  return e;
}

std::pair<size_t, size_t> LineColumn(std::string_view text, size_t byte) {
  size_t line = 1, col = 1;
  for (size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

constexpr std::array<std::string_view, kMetricCount> kMetricNames = {
    "mean_hw_a",        "mean_hw_b",        "sparsity_a",
    "sparsity_b",       "distinct_a",       "value_mean_a",
    "value_std_a",      "alignment",        "operand_toggles",
    "accumulator_toggles", "total_toggles", "output_nonfinite",
    "saturations",      "nans",             "power_mean_w",
    "power_max_w",      "power_samples",    "runtime_us",
};

void Set(MetricValues& m, Metric k, double v) { m[static_cast<size_t>(k)] = v; }

}  // namespace

std::string_view RunModeName(RunMode mode) {
  switch (mode) {
    case RunMode::kSimulate: return "simulate";
    case RunMode::kHardware: return "hardware";
    case RunMode::kBoth: return "both";
  }
  return "?";
}

RunMode ParseRunMode(std::string_view name) {
  for (auto m : {RunMode::kSimulate, RunMode::kHardware, RunMode::kBoth}) {
    if (RunModeName(m) == name) return m;
  }
  throw Error("unknown mode '" + std::string(name) +
              "' (simulate, hardware or both)");
}

std::vector<double> Sweep::ValuesFor(DType dtype) const {
  if (dtype == DType::kINT8 && values_int8) return *values_int8;
  if (bit_range) {
    std::vector<double> v;
    for (int b = 0; b <= BitWidth(dtype); ++b) v.push_back(b);
    return v;
  }
  return values;
}

PatternSpec Experiment::SpecFor(DType dtype, double sweep_value,
                                int seed_index) const {
  PatternSpec spec = base;
  spec.dtype = dtype;
  if (dtype == DType::kINT8 && dist_int8) spec.dist = *dist_int8;
  SetParameter(spec, sweep.variable, sweep_value);
  spec.seed_a = DeriveSeed(base.seed_a, static_cast<uint64_t>(seed_index));
  spec.seed_b = DeriveSeed(base.seed_b, static_cast<uint64_t>(seed_index));
  return spec;
}

uint64_t Experiment::IterationsFor(DType dtype) const {
  return dtype == DType::kFP16T ? iterations_fp16t : iterations;
}

const Experiment& ExperimentSuite::Find(std::string_view name) const {
  for (const auto& e : experiments) {
    if (e.name == name) return e;
  }
  throw Error("suite has no experiment '" + std::string(name) + "'");
}

ExperimentSuite ParseConfig(std::string_view text, std::string_view source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = LineColumn(text, e.byte == 0 ? 0 : e.byte - 1);
    throw Error(std::string(source) + ":" + std::to_string(line) + ":" +
                std::to_string(col) + ": parse error: " + e.what());
  }
  const Path top("");
  CheckKeys(root, top, {"suite", "defaults", "telemetry", "experiments"});
  ExperimentSuite suite;
  suite.name = root.contains("suite") ? GetString(root["suite"], top / "suite")
                                      : std::string("suite");
  Defaults defaults;
  if (root.contains("defaults")) {
    CheckKeys(root["defaults"], top / "defaults", kCommonKeys);
    ParseCommon(root["defaults"], top / "defaults", defaults);
  }
  if (root.contains("telemetry")) {
    const Path t = top / "telemetry";
    const json& tj = root["telemetry"];
    CheckKeys(tj, t, {"power_cmd", "warmup_ms", "interval_ms"});
    if (tj.contains("power_cmd")) suite.power_cmd = GetString(tj["power_cmd"], t / "power_cmd");
    if (tj.contains("warmup_ms")) suite.warmup_ms = GetInteger(tj["warmup_ms"], t / "warmup_ms", 0);
    if (tj.contains("interval_ms")) {
      suite.interval_ms = GetInteger(tj["interval_ms"], t / "interval_ms", 1);
    }
  }
  if (!root.contains("experiments")) Fail(top / "experiments", "required");
  const json& exps = root["experiments"];
  if (!exps.is_array() || exps.empty()) {
    Fail(top / "experiments", "expected a non-empty array");
  }
  std::set<std::string> names;
  for (size_t i = 0; i < exps.size(); ++i) {
    Experiment e = ParseExperiment(exps[i], (top / "experiments")[i], defaults);
    if (!names.insert(e.name).second) {
      Fail((top / "experiments")[i] / "name", "duplicate experiment name");
    }
    suite.experiments.push_back(std::move(e));
  }
  return suite;
}

ExperimentSuite LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str(), path.string());
}

std::filesystem::path BundledConfigPath(std::string_view name) {
  return std::filesystem::path(POWERLAB_CONFIG_DIR) / (std::string(name) + ".json");
}

void ApplyOverrides(ExperimentSuite& suite, const SuiteOverrides& o) {
  if (o.size && *o.size == 0) throw Error("--size must be positive");
  if (o.seeds && *o.seeds < 1) throw Error("--seeds must be >= 1");
  for (auto& e : suite.experiments) {
    if (o.size) e.base.rows = e.base.inner = e.base.cols = *o.size;
    if (o.seeds) e.seeds = *o.seeds;
    if (o.mode) e.mode = *o.mode;
  }
}

AuditReport AuditSuite(const ExperimentSuite& suite) {
  AuditReport r;
  std::set<std::string> valid;
  for (int t = 1; t <= 15; ++t) valid.insert("T" + std::to_string(t));
  for (const auto& e : suite.experiments) {
    for (const auto& t : e.takeaways) {
      if (valid.count(t)) {
        r.coverage[t].push_back(e.name);
      } else {
        r.unknown.push_back(e.name + ":" + t);
      }
    }
  }
  for (int t = 1; t <= 15; ++t) {
    const std::string label = "T" + std::to_string(t);
    if (!r.coverage.count(label)) r.missing.push_back(label);
  }
  return r;
}

std::string_view MetricName(Metric m) {
  return kMetricNames[static_cast<size_t>(m)];
}

std::optional<Metric> ParseMetric(std::string_view name) {
  for (size_t i = 0; i < kMetricCount; ++i) {
    if (kMetricNames[i] == name) return static_cast<Metric>(i);
  }
  return std::nullopt;
}

void ExperimentResult::Aggregate() {
  const auto n = static_cast<double>(records.size());
  for (size_t k = 0; k < kMetricCount; ++k) {
    if (records.empty()) {
      mean[k] = stddev[k] = kNaN;
      continue;
    }
    double sum = 0.0;
    for (const auto& r : records) sum += r.metrics[k];
    const double mu = sum / n;
    double ss = 0.0;
    for (const auto& r : records) ss += (r.metrics[k] - mu) * (r.metrics[k] - mu);
    mean[k] = mu;
    stddev[k] = records.size() > 1 ? std::sqrt(ss / (n - 1.0)) : (std::isnan(mu) ? kNaN : 0.0);
  }
}

KernelLauncher ReferenceKernelLauncher(DType dtype) {
  const ArithmeticPolicy policy = ArithmeticPolicy::For(dtype);
  return [policy](const Matrix& a, const Matrix& b, uint64_t iterations) {
    for (uint64_t i = 0; i < iterations; ++i) Gemm({a, b}, policy);
  };
}

ExperimentResult RunExperiment(const Experiment& experiment, DType dtype,
                               double sweep_value, const RunContext& ctx) {
  RunMode mode = ctx.mode.value_or(experiment.mode);
  const bool hardware_available = !ctx.power_cmd.empty();
  if (mode == RunMode::kHardware && !hardware_available) {
    throw Error("hardware mode needs a power command (--power-cmd or " +
                std::string(kPowerCommandEnv) + ")");
  }
  if (mode == RunMode::kBoth && !hardware_available) {
    if (ctx.warn) ctx.warn("no power command configured; running simulate only");
    mode = RunMode::kSimulate;
  }
  const bool simulate = mode != RunMode::kHardware;
  const bool hardware = mode != RunMode::kSimulate;
  const ArithmeticPolicy policy = ArithmeticPolicy::For(dtype);

  ExperimentResult result;
  result.experiment = experiment.name;
  result.dtype = dtype;
  result.sweep_variable = experiment.sweep.variable;
  result.sweep_value = sweep_value;

  for (int s = 0; s < experiment.seeds; ++s) {
    const PatternSpec spec = experiment.SpecFor(dtype, sweep_value, s);
    const PatternPair pair = BuildPatternPair(spec);
    const MatrixSummary sa = Summarize(pair.a);
    const MatrixSummary sb = Summarize(pair.b);

    SeedRecord rec;
    rec.seed_index = s;
    rec.seed_a = spec.seed_a;
    rec.seed_b = spec.seed_b;
    rec.metrics.fill(kNaN);
    auto& m = rec.metrics;
    Set(m, Metric::kMeanHammingWeightA, sa.mean_hamming_weight);
    Set(m, Metric::kMeanHammingWeightB, sb.mean_hamming_weight);
    Set(m, Metric::kSparsityA, sa.sparsity_fraction);
    Set(m, Metric::kSparsityB, sb.sparsity_fraction);
    Set(m, Metric::kDistinctValuesA, static_cast<double>(sa.distinct_value_count));
    Set(m, Metric::kValueMeanA, sa.value_mean);
    Set(m, Metric::kValueStdA, sa.value_std);
    Set(m, Metric::kAlignment, MeanPairwiseAlignment(pair.a, pair.b));
    uint64_t saturations = sa.saturations + sb.saturations;
    uint64_t nans = sa.nans + sb.nans;

    if (simulate) {
      SwitchingOptions opts;
      opts.threads = ctx.threads;
      const SimulationResult sim = Simulate(pair.a, pair.b, policy, opts);
      Set(m, Metric::kOperandToggles, static_cast<double>(sim.toggles.operand_toggles()));
      Set(m, Metric::kAccumulatorToggles,
          static_cast<double>(sim.toggles.accumulator_toggles));
      Set(m, Metric::kTotalToggles, static_cast<double>(sim.toggles.total_toggles()));
      uint64_t nonfinite = 0;
      for (double v : sim.gemm.accumulators) nonfinite += !std::isfinite(v);
      Set(m, Metric::kOutputNonFinite, static_cast<double>(nonfinite));
      saturations += sim.gemm.stats.saturations;
    }
    if (hardware) {
      const KernelLauncher launch =
          ctx.launcher ? ctx.launcher(dtype) : ReferenceKernelLauncher(dtype);
      const uint64_t iterations = experiment.IterationsFor(dtype);
      auto sampler = PowerSampler::Start(ctx.power_cmd, ctx.interval_ms);
      sampler->MarkWorkloadStart();
      const IterationTiming timing =
          TimeIterations([&] { launch(pair.a, pair.b, 1); }, iterations);
      sampler->MarkWorkloadStop();
      const PowerStats power =
          TrimAndSummarize(sampler->Stop(), ctx.warmup_ms);
      Set(m, Metric::kPowerMeanW, power.mean_watts);
      Set(m, Metric::kPowerMaxW, power.max_watts);
      Set(m, Metric::kPowerSamples, static_cast<double>(power.sample_count));
      Set(m, Metric::kRuntimeUs, timing.per_iteration_us);
    }
    Set(m, Metric::kSaturations, static_cast<double>(saturations));
    Set(m, Metric::kNans, static_cast<double>(nans));
    result.records.push_back(rec);
  }
  result.Aggregate();
  return result;
}

std::vector<ExperimentResult> RunSuite(
    const ExperimentSuite& suite, const RunContext& ctx,
    const std::function<void(const ExperimentResult&)>& progress) {
  std::vector<ExperimentResult> out;
  for (const auto& e : suite.experiments) {
    for (DType t : e.dtypes) {
      for (double v : e.sweep.ValuesFor(t)) {
        out.push_back(RunExperiment(e, t, v, ctx));
        if (progress) progress(out.back());
      }
    }
  }
  return out;
}

}  // namespace powerlab
