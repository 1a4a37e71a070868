// Copyright 2026 The PolyQD Authors.
//
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

/**
 * \file polyqd/svg.hpp
 *
 * \brief Deterministic SVG emitters: metric line charts over seeds and
 *  shape galleries shaded by Pareto pixel error.
 */

#ifndef POLYQD_SVG_HPP
#define POLYQD_SVG_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "polyqd/experiments.hpp"
#include "polyqd/geometry.hpp"

namespace polyqd {

namespace svg {

inline std::string num(double v, const char* fmt = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

inline std::string exact(double v) { return num(v, "%.17g"); }

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const std::vector<std::string>& palette() {
  static const std::vector<std::string> p{"#1b9e77", "#d95f02", "#7570b3", "#e7298a",
                                          "#66a61e", "#e6ab02", "#a6761d", "#666666"};
  return p;
}

}  // namespace svg

// ---------------------------------------------------------------------------
// Line charts.

struct ChartSeries {
  std::string name;
  std::vector<double> median, lo, hi;  ///< one per x tick; NaN where absent
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> x_ticks;
  std::vector<ChartSeries> series;
};

/// One median line per series over a min/max band. Each median marker
/// carries its exact value in a data-median attribute.
inline std::string render_line_chart(const LineChart& c) {
  constexpr double W = 480, H = 320, L = 64, R = 120, T = 36, B = 48;
  const double pw = W - L - R, ph = H - T - B;
  double ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : c.series)
    for (std::size_t i = 0; i < s.median.size(); ++i) {
      if (std::isnan(s.median[i])) continue;
      ymin = std::min({ymin, s.lo[i], s.median[i]});
      ymax = std::max({ymax, s.hi[i], s.median[i]});
    }
  if (!std::isfinite(ymin)) ymin = 0.0, ymax = 1.0;
  if (!(ymax > ymin)) {
    const double pad = ymin == 0.0 ? 1.0 : std::abs(ymin) * 0.05;
    ymin -= pad;
    ymax += pad;
  }
  const std::size_t nx = c.x_ticks.size();
  auto xpos = [&](std::size_t i) { return L + (nx <= 1 ? pw / 2 : pw * static_cast<double>(i) / static_cast<double>(nx - 1)); };
  auto ypos = [&](double v) { return T + ph * (1.0 - (v - ymin) / (ymax - ymin)); };

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg::num(W, "%.0f") + "\" height=\"" +
       svg::num(H, "%.0f") + "\" viewBox=\"0 0 " + svg::num(W, "%.0f") + " " + svg::num(H, "%.0f") + "\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + svg::num(L + pw / 2) + "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"14\">" + svg::escape(c.title) + "</text>\n";
  o += "<g stroke=\"black\" fill=\"none\"><path d=\"M" + svg::num(L) + " " + svg::num(T) + " V" +
       svg::num(T + ph) + " H" + svg::num(L + pw) + "\"/></g>\n";
  o += "<g font-family=\"sans-serif\" font-size=\"10\">\n";
  for (std::size_t i = 0; i < nx; ++i)
    o += "<text x=\"" + svg::num(xpos(i)) + "\" y=\"" + svg::num(T + ph + 14) + "\" text-anchor=\"middle\">" +
         svg::escape(c.x_ticks[i]) + "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = ymin + (ymax - ymin) * k / 4.0;
    o += "<text x=\"" + svg::num(L - 4) + "\" y=\"" + svg::num(ypos(v) + 3) + "\" text-anchor=\"end\">" +
         svg::num(v, "%.4g") + "</text>\n";
  }
  o += "<text x=\"" + svg::num(L + pw / 2) + "\" y=\"" + svg::num(H - 10) + "\" text-anchor=\"middle\">" +
       svg::escape(c.x_label) + "</text>\n";
  o += "<text transform=\"translate(14 " + svg::num(T + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       svg::escape(c.y_label) + "</text>\n";
  o += "</g>\n";

  for (std::size_t si = 0; si < c.series.size(); ++si) {
    const auto& s = c.series[si];
    const auto& colour = svg::palette()[si % svg::palette().size()];
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < s.median.size(); ++i)
      if (!std::isnan(s.median[i])) idx.push_back(i);
    o += "<g class=\"series\" data-name=\"" + svg::escape(s.name) + "\">\n";
    if (!idx.empty()) {
      std::string band = "M";
      for (auto i : idx) band += svg::num(xpos(i)) + " " + svg::num(ypos(s.hi[i])) + " L";
      for (auto it = idx.rbegin(); it != idx.rend(); ++it)
        band += svg::num(xpos(*it)) + " " + svg::num(ypos(s.lo[*it])) + " L";
      band.resize(band.size() - 2);
      o += "<path class=\"band\" d=\"" + band + " Z\" fill=\"" + colour + "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
      std::string line;
      for (auto i : idx) line += (line.empty() ? "M" : " L") + svg::num(xpos(i)) + " " + svg::num(ypos(s.median[i]));
      o += "<path class=\"median\" d=\"" + line + "\" fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"2\"/>\n";
      for (auto i : idx)
        o += "<circle cx=\"" + svg::num(xpos(i)) + "\" cy=\"" + svg::num(ypos(s.median[i])) + "\" r=\"3\" fill=\"" +
             colour + "\" data-x=\"" + svg::escape(c.x_ticks[i]) + "\" data-median=\"" + svg::exact(s.median[i]) +
             "\" data-min=\"" + svg::exact(s.lo[i]) + "\" data-max=\"" + svg::exact(s.hi[i]) + "\"/>\n";
    }
    const double ly = T + 12 + 16 * static_cast<double>(si);
    o += "<rect x=\"" + svg::num(L + pw + 12) + "\" y=\"" + svg::num(ly - 8) + "\" width=\"10\" height=\"10\" fill=\"" +
         colour + "\"/>\n";
    o += "<text x=\"" + svg::num(L + pw + 26) + "\" y=\"" + svg::num(ly) +
         "\" font-family=\"sans-serif\" font-size=\"10\">" + svg::escape(s.name) + "</text>\n";
    o += "</g>\n";
  }
  o += "</svg>\n";
  return o;
}

struct ResultMetric {
  std::string name;
  std::string label;
  std::function<double(const RunResult&)> get;
};

/// The six diversity panels and median fitness.
inline const std::vector<ResultMetric>& result_metrics() {
  static const std::vector<ResultMetric> m{
      {"sdnn_gen", "genetic SDNN", [](const RunResult& r) { return r.genetic.sdnn; }},
      {"spd_gen", "genetic SPD", [](const RunResult& r) { return r.genetic.spd; }},
      {"pd_gen", "genetic PD", [](const RunResult& r) { return r.genetic.pd; }},
      {"sdnn_phen", "phenotypic SDNN", [](const RunResult& r) { return r.phenotypic.sdnn; }},
      {"spd_phen", "phenotypic SPD", [](const RunResult& r) { return r.phenotypic.spd; }},
      {"pd_phen", "phenotypic PD", [](const RunResult& r) { return r.phenotypic.pd; }},
      {"fitness_median", "median fitness", [](const RunResult& r) { return r.fitness_median; }},
  };
  return m;
}

/// One chart per metric. The x axis is the bin count for bin sweeps and
/// the bounds case otherwise; series are algorithms, suffixed with the case
/// when a bin sweep spans several cases. Statistics are over seeds.
inline std::vector<std::pair<std::string, LineChart>> build_result_charts(const std::vector<RunResult>& rows) {
  if (rows.empty()) throw std::invalid_argument("build_result_charts: no rows");
  const bool by_bins = std::all_of(rows.begin(), rows.end(), [](const RunResult& r) { return r.study == "bin_sweep"; });
  std::set<char> cases;
  for (const auto& r : rows) cases.insert(r.bounds_case);

  std::vector<std::string> xs, names;
  auto x_of = [&](const RunResult& r) { return by_bins ? std::to_string(r.bins) : std::string(1, r.bounds_case); };
  auto name_of = [&](const RunResult& r) {
    return by_bins && cases.size() > 1 ? r.algorithm + " (" + r.bounds_case + ")" : r.algorithm;
  };
  std::vector<std::pair<std::size_t, std::string>> xorder;
  for (const auto& r : rows) {
    if (std::find(xs.begin(), xs.end(), x_of(r)) == xs.end()) {
      xs.push_back(x_of(r));
      xorder.push_back({by_bins ? r.bins : static_cast<std::size_t>(r.bounds_case), x_of(r)});
    }
    if (std::find(names.begin(), names.end(), name_of(r)) == names.end()) names.push_back(name_of(r));
  }
  std::sort(xorder.begin(), xorder.end());
  xs.clear();
  for (const auto& [k, x] : xorder) xs.push_back(x);

  std::vector<std::pair<std::string, LineChart>> out;
  for (const auto& m : result_metrics()) {
    LineChart c;
    c.title = m.label;
    c.x_label = by_bins ? "bins" : "case";
    c.y_label = m.label;
    c.x_ticks = xs;
    for (const auto& n : names) {
      ChartSeries s;
      s.name = n;
      for (const auto& x : xs) {
        std::vector<double> v;
        for (const auto& r : rows)
          if (name_of(r) == n && x_of(r) == x) v.push_back(m.get(r));
        if (v.empty()) {
          s.median.push_back(NAN);
          s.lo.push_back(NAN);
          s.hi.push_back(NAN);
        } else {
          s.median.push_back(median(v));
          s.lo.push_back(*std::min_element(v.begin(), v.end()));
          s.hi.push_back(*std::max_element(v.begin(), v.end()));
        }
      }
      c.series.push_back(std::move(s));
    }
    out.emplace_back(m.name + ".svg", std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gallery.

/// Green level of a gallery cell: 255 at zero pixel error, falling linearly
/// to 64 at the largest error in the set.
inline int gallery_green(double px, double max_px) {
  const double b = max_px > 0.0 ? 1.0 - std::clamp(px / max_px, 0.0, 1.0) : 1.0;
  return static_cast<int>(std::lround(64.0 + 191.0 * b));
}

/// Square grid, ceil(sqrt(n)) columns, of the shapes in order. Each cell
/// draws its set pixels, y up, coloured by Pareto pixel error.
inline std::string render_gallery(std::span<const Bitmap> shapes, std::span<const double> pareto_px,
                                  std::size_t cell = 48) {
  if (shapes.size() != pareto_px.size()) throw std::invalid_argument("render_gallery: size mismatch");
  const std::size_t n = shapes.size();
  std::size_t cols = 1;
  while (cols * cols < n) ++cols;
  const std::size_t rows = n == 0 ? 0 : (n + cols - 1) / cols;
  const double max_px = pareto_px.empty() ? 0.0 : *std::max_element(pareto_px.begin(), pareto_px.end());
  const double scale = static_cast<double>(cell - 4) / static_cast<double>(kRaster);
  const std::size_t w = cols * cell, h = std::max<std::size_t>(rows, 1) * cell;

  std::string o = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
                  std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) +
                  "\" data-columns=\"" + std::to_string(cols) + "\" data-rows=\"" + std::to_string(rows) + "\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"#101010\"/>\n";
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t cx = (k % cols) * cell + 2, cy = (k / cols) * cell + 2;
    const int g = gallery_green(pareto_px[k], max_px);
    char colour[8];
    std::snprintf(colour, sizeof colour, "#00%02x00", g);
    std::string path;
    for (std::size_t j = 0; j < kRaster; ++j) {
      const std::size_t y = kRaster - 1 - j;
      std::size_t i = 0;
      while (i < kRaster) {
        if (!shapes[k].get(i, j)) {
          ++i;
          continue;
        }
        std::size_t e = i;
        while (e < kRaster && shapes[k].get(e, j)) ++e;
        path += "M" + std::to_string(i) + " " + std::to_string(y) + "h" + std::to_string(e - i) + "v1h-" +
                std::to_string(e - i) + "z";
        i = e;
      }
    }
    o += "<g class=\"cell\" data-index=\"" + std::to_string(k) + "\" data-px=\"" + svg::exact(pareto_px[k]) +
         "\" data-green=\"" + std::to_string(g) + "\" transform=\"translate(" + std::to_string(cx) + " " +
         std::to_string(cy) + ") scale(" + svg::num(scale, "%.6g") + ")\">";
    o += "<rect width=\"64\" height=\"64\" fill=\"#202020\"/>";
    if (!path.empty()) o += "<path d=\"" + path + "\" fill=\"" + colour + "\"/>";
    o += "</g>\n";
  }
  o += "</svg>\n";
  return o;
}

}  // namespace polyqd

#endif  // POLYQD_SVG_HPP
