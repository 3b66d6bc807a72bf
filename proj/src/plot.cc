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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "powerlab/report.h"

namespace powerlab {
namespace {

constexpr int kPanelW = 360;
constexpr int kPanelH = 240;
constexpr int kMargin = 48;
constexpr int kColumns = 3;

constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

std::string Fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

struct Point {
  double x, y, err;
};

struct Series {
  std::string label;
  const char* color;
  std::vector<Point> points;
};

struct Panel {
  std::string title, x_label, y_label;
  std::vector<Series> series;
  bool lines = true;
};

struct Range {
  double lo = HUGE_VAL, hi = -HUGE_VAL;
  void Add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void Finish() {
    if (lo > hi) lo = 0, hi = 1;
    if (lo == hi) {
      const double pad = lo == 0 ? 1 : std::abs(lo) * 0.1;
      lo -= pad;
      hi += pad;
    }
  }
};

// Powers-of-two sweeps read better on a log axis.
bool UseLog2(const Panel& p) {
  double lo = HUGE_VAL, hi = 0;
  for (const auto& s : p.series) {
    for (const auto& pt : s.points) {
      if (!(pt.x > 0)) return false;
      lo = std::min(lo, pt.x);
      hi = std::max(hi, pt.x);
    }
  }
  return hi / lo >= 64;
}

void DrawPanel(std::ostream& svg, const Panel& p, int ox, int oy) {
  const bool logx = p.lines && UseLog2(p);
  const auto tx = [logx](double x) { return logx ? std::log2(x) : x; };
  Range xr, yr;
  for (const auto& s : p.series) {
    for (const auto& pt : s.points) {
      xr.Add(tx(pt.x));
      yr.Add(pt.y - (std::isfinite(pt.err) ? pt.err : 0));
      yr.Add(pt.y + (std::isfinite(pt.err) ? pt.err : 0));
    }
  }
  xr.Finish();
  yr.Finish();
  const double w = kPanelW - 2 * kMargin, h = kPanelH - 2 * kMargin;
  const auto px = [&](double x) { return ox + kMargin + (tx(x) - xr.lo) / (xr.hi - xr.lo) * w; };
  const auto py = [&](double y) { return oy + kMargin + h - (y - yr.lo) / (yr.hi - yr.lo) * h; };

  svg << "<g>\n<rect x='" << ox + kMargin << "' y='" << oy + kMargin << "' width='" << w
      << "' height='" << h << "' fill='none' stroke='#888'/>\n";
  svg << "<text x='" << ox + kPanelW / 2 << "' y='" << oy + 20
      << "' text-anchor='middle' font-size='12'>" << p.title << "</text>\n";
  svg << "<text x='" << ox + kPanelW / 2 << "' y='" << oy + kPanelH - 8
      << "' text-anchor='middle' font-size='10'>" << p.x_label
      << (logx ? " (log2)" : "") << "</text>\n";
  svg << "<text x='" << ox + 10 << "' y='" << oy + kPanelH / 2
      << "' font-size='10' transform='rotate(-90 " << ox + 10 << ' ' << oy + kPanelH / 2
      << ")' text-anchor='middle'>" << p.y_label << "</text>\n";
  const auto label = [&](double v, double x, double y, const char* anchor) {
    svg << "<text x='" << x << "' y='" << y << "' font-size='9' text-anchor='" << anchor
        << "'>" << Fmt(v) << "</text>\n";
  };
  label(logx ? std::exp2(xr.lo) : xr.lo, ox + kMargin, oy + kMargin + h + 12, "start");
  label(logx ? std::exp2(xr.hi) : xr.hi, ox + kMargin + w, oy + kMargin + h + 12, "end");
  label(yr.lo, ox + kMargin - 3, oy + kMargin + h, "end");
  label(yr.hi, ox + kMargin - 3, oy + kMargin + 8, "end");

  int legend = 0;
  for (const auto& s : p.series) {
    if (p.lines && s.points.size() > 1) {
      svg << "<polyline fill='none' stroke='" << s.color << "' points='";
      for (const auto& pt : s.points) {
        if (std::isfinite(pt.y)) svg << px(pt.x) << ',' << py(pt.y) << ' ';
      }
      svg << "'/>\n";
    }
    for (const auto& pt : s.points) {
      if (!std::isfinite(pt.y)) continue;
      if (std::isfinite(pt.err) && pt.err > 0) {
        svg << "<line x1='" << px(pt.x) << "' x2='" << px(pt.x) << "' y1='"
            << py(pt.y - pt.err) << "' y2='" << py(pt.y + pt.err) << "' stroke='"
            << s.color << "'/>\n";
      }
      svg << "<circle cx='" << px(pt.x) << "' cy='" << py(pt.y) << "' r='2.5' fill='"
          << s.color << "'/>\n";
    }
    svg << "<text x='" << ox + kPanelW - kMargin + 4 << "' y='"
        << oy + kMargin + 10 + 12 * legend++ << "' font-size='9' fill='" << s.color
        << "'>" << s.label << "</text>\n";
  }
  svg << "</g>\n";
}

void WriteSvg(const std::filesystem::path& path, const std::vector<Panel>& panels) {
  const int cols = std::min<int>(kColumns, static_cast<int>(panels.size()));
  const int rows = (static_cast<int>(panels.size()) + kColumns - 1) / kColumns;
  std::ofstream svg(path, std::ios::binary | std::ios::trunc);
  if (!svg) throw Error("cannot write " + path.string());
  svg << "<?xml version='1.0' encoding='UTF-8'?>\n"
      << "<svg xmlns='http://www.w3.org/2000/svg' width='" << cols * kPanelW
      << "' height='" << rows * kPanelH << "' font-family='sans-serif'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n";
  for (size_t i = 0; i < panels.size(); ++i) {
    DrawPanel(svg, panels[i], static_cast<int>(i % kColumns) * kPanelW,
              static_cast<int>(i / kColumns) * kPanelH);
  }
  svg << "</svg>\n";
  if (!svg) throw Error("write failed: " + path.string());
}

const char* ColorFor(DType t) { return kColors[static_cast<size_t>(t)]; }

}  // namespace

std::string_view PlotKindName(PlotKind kind) {
  return kind == PlotKind::kSweepLines ? "sweep_lines" : "alignment_scatter";
}

PlotKind ParsePlotKind(std::string_view name) {
  for (auto k : {PlotKind::kSweepLines, PlotKind::kAlignmentScatter}) {
    if (PlotKindName(k) == name) return k;
  }
  throw Error("unknown plot kind '" + std::string(name) +
              "' (sweep_lines or alignment_scatter)");
}

Metric ResolvePlotMetric(const std::vector<ExperimentResult>& results,
                         std::string_view metric) {
  if (metric != "auto") {
    const auto m = ParseMetric(metric);
    if (!m) throw Error("unknown metric '" + std::string(metric) + "'");
    return *m;
  }
  for (const auto& r : results) {
    if (!std::isnan(r.mean_of(Metric::kPowerMeanW))) return Metric::kPowerMeanW;
  }
  return Metric::kTotalToggles;
}

PlotFiles EmitPlotData(const std::vector<ExperimentResult>& results,
                       PlotKind kind, const std::filesystem::path& path,
                       std::string_view metric_name) {
  if (results.empty()) throw Error("no results to plot");
  const Metric metric = ResolvePlotMetric(results, metric_name);
  const std::string mname(MetricName(metric));
  const auto k = static_cast<size_t>(metric);
  PlotFiles files{path, std::filesystem::path(path).replace_extension(".svg")};

  std::ofstream data(path, std::ios::binary | std::ios::trunc);
  if (!data) throw Error("cannot write " + path.string());
  std::vector<Panel> panels;

  if (kind == PlotKind::kSweepLines) {
    data << "experiment\tdtype\tsweep_variable\tx\t" << mname << "_mean\t" << mname
         << "_std\n";
    // Panels in first-seen experiment order, series in first-seen dtype order.
    std::map<std::string, size_t> index;
    for (const auto& r : results) {
      data << r.experiment << '\t' << DTypeName(r.dtype) << '\t' << r.sweep_variable << '\t'
           << FormatNumber(r.sweep_value) << '\t' << FormatNumber(r.mean[k]) << '\t'
           << FormatNumber(r.stddev[k]) << '\n';
      auto [it, fresh] = index.try_emplace(r.experiment, panels.size());
      if (fresh) panels.push_back({r.experiment, r.sweep_variable, mname, {}, true});
      Panel& p = panels[it->second];
      auto s = std::find_if(p.series.begin(), p.series.end(),
                            [&](const Series& x) { return x.label == DTypeName(r.dtype); });
      if (s == p.series.end()) {
        p.series.push_back({std::string(DTypeName(r.dtype)), ColorFor(r.dtype), {}});
        s = std::prev(p.series.end());
      }
      s->points.push_back({r.sweep_value, r.mean[k], r.stddev[k]});
    }
    for (auto& p : panels) {
      for (auto& s : p.series) {
        std::stable_sort(s.points.begin(), s.points.end(),
                         [](const Point& a, const Point& b) { return a.x < b.x; });
      }
    }
  } else {
    data << "experiment\tdtype\tsweep_value\talignment\tmean_hw_a\t" << mname << "_mean\n";
    Panel by_align{"bit alignment", "mean pairwise alignment", mname, {}, false};
    Panel by_weight{"Hamming weight", "mean Hamming weight of A", mname, {}, false};
    for (DType t : kAllDTypes) {
      Series sa{std::string(DTypeName(t)), ColorFor(t), {}};
      Series sw = sa;
      for (const auto& r : results) {
        if (r.dtype != t) continue;
        const double align = r.mean_of(Metric::kAlignment);
        const double hw = r.mean_of(Metric::kMeanHammingWeightA);
        data << r.experiment << '\t' << DTypeName(t) << '\t' << FormatNumber(r.sweep_value)
             << '\t' << FormatNumber(align) << '\t' << FormatNumber(hw) << '\t'
             << FormatNumber(r.mean[k]) << '\n';
        sa.points.push_back({align, r.mean[k], NAN});
        sw.points.push_back({hw, r.mean[k], NAN});
      }
      if (!sa.points.empty()) {
        by_align.series.push_back(std::move(sa));
        by_weight.series.push_back(std::move(sw));
      }
    }
    panels = {by_align, by_weight};
  }
  data.flush();
  if (!data) throw Error("write failed: " + path.string());
  WriteSvg(files.svg, panels);
  return files;
}

}  // namespace powerlab
