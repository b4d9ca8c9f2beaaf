// tools/plot.cc

// Copyright 2026  The svbackend Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "plot.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "svb/error.h"
#include "svb/metrics.h"

namespace svb {

namespace {

constexpr int kBins = 50;

std::ofstream OpenOut(const std::filesystem::path &path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open '" + path.string() + "' for writing");
  return os;
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void WriteHistogram(const Histogram &h, const std::filesystem::path &path) {
  std::ofstream os = OpenOut(path);
  os << "bin_lo,bin_hi,count\n";
  const double width = (h.hi - h.lo) / static_cast<double>(h.counts.size());
  for (std::size_t k = 0; k < h.counts.size(); ++k)
    os << Num(h.lo + width * k) << ',' << Num(h.lo + width * (k + 1)) << ',' << h.counts[k]
       << '\n';
}

void WriteSvg(const Histogram &tgt, const Histogram &non, std::span<const double> betas,
              const std::vector<double> &theta_min, const std::filesystem::path &path) {
  const double w = 800, h = 400, margin = 40;
  // Densities so both classes are visible regardless of their sizes.
  auto density = [](const Histogram &hist) {
    double total = 0;
    for (auto c : hist.counts) total += static_cast<double>(c);
    std::vector<double> d;
    for (auto c : hist.counts) d.push_back(total > 0 ? static_cast<double>(c) / total : 0.0);
    return d;
  };
  std::vector<double> dt = density(tgt), dn = density(non);
  double peak = 1e-12;
  for (double v : dt) peak = std::max(peak, v);
  for (double v : dn) peak = std::max(peak, v);
  const double x0 = tgt.lo, x1 = tgt.hi;
  auto px = [&](double x) { return margin + (x - x0) / (x1 - x0) * (w - 2 * margin); };
  auto py = [&](double y) { return h - margin - y / peak * (h - 2 * margin); };

  std::ofstream os = OpenOut(path);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  auto bars = [&](const std::vector<double> &d, const char *color) {
    const double bw = (x1 - x0) / static_cast<double>(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) {
      if (d[k] <= 0) continue;
      double left = px(x0 + bw * k), right = px(x0 + bw * (k + 1)), top = py(d[k]);
      os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << right - left
         << "\" height=\"" << (h - margin) - top << "\" fill=\"" << color
         << "\" fill-opacity=\"0.5\"/>\n";
    }
  };
  bars(dn, "steelblue");
  bars(dt, "firebrick");
  auto vline = [&](double x, const char *color, const std::string &label) {
    if (!std::isfinite(x) || x < x0 || x > x1) return;
    os << "<line x1=\"" << px(x) << "\" y1=\"" << margin << "\" x2=\"" << px(x) << "\" y2=\""
       << h - margin << "\" stroke=\"" << color << "\" stroke-dasharray=\"4 3\"/>\n"
       << "<text x=\"" << px(x) + 3 << "\" y=\"" << margin + 12 << "\" font-size=\"11\">"
       << label << "</text>\n";
  };
  for (std::size_t k = 0; k < betas.size(); ++k) {
    vline(std::log(betas[k]), "black", "ln " + Num(betas[k]));
    if (k < theta_min.size()) vline(theta_min[k], "darkgreen", "min " + Num(betas[k]));
  }
  os << "<line x1=\"" << margin << "\" y1=\"" << h - margin << "\" x2=\"" << w - margin
     << "\" y2=\"" << h - margin << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << margin << "\" y=\"" << h - 10 << "\" font-size=\"11\">" << Num(x0)
     << "</text>\n"
     << "<text x=\"" << w - margin << "\" y=\"" << h - 10
     << "\" font-size=\"11\" text-anchor=\"end\">" << Num(x1) << "</text>\n"
     << "</svg>\n";
}

}  // namespace

Histogram MakeHistogram(std::span<const double> scores, double lo, double hi, int bins) {
  if (bins < 1 || !(hi > lo)) throw UsageError("histogram: need bins >= 1 and hi > lo");
  Histogram h{lo, hi, std::vector<std::size_t>(bins, 0)};
  for (double s : scores) {
    if (s < lo || s > hi) continue;
    int k = static_cast<int>(std::floor((s - lo) / (hi - lo) * bins));
    ++h.counts[std::clamp(k, 0, bins - 1)];
  }
  return h;
}

void WritePlotOutputs(std::span<const double> scores, std::span<const int> labels,
                      std::span<const double> betas, const std::string &out_dir) {
  MetricReport report = Evaluate(scores, labels, betas);
  std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory '" + out_dir + "': " + ec.message());

  {
    std::ofstream os = OpenOut(dir / "det.csv");
    os << "p_fa,p_miss\n";
    for (const auto &p : report.det_points) os << Num(p.p_fa) << ',' << Num(p.p_miss) << '\n';
  }

  auto [mn, mx] = std::minmax_element(scores.begin(), scores.end());
  double lo = *mn, hi = *mx;
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  std::vector<double> tgt, non;
  for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] == 1 ? tgt : non).push_back(scores[i]);
  Histogram ht = MakeHistogram(tgt, lo, hi, kBins);
  Histogram hn = MakeHistogram(non, lo, hi, kBins);
  WriteHistogram(ht, dir / "hist_target.csv");
  WriteHistogram(hn, dir / "hist_nontarget.csv");
  WriteSvg(ht, hn, betas, report.theta_min, dir / "scores.svg");
}

}  // namespace svb
