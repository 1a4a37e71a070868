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

// Brute-force reference implementations used only by tests. None of these
// call into the code paths they check.

#ifndef POLYQD_TESTS_ORACLES_HPP
#define POLYQD_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "polyqd/geometry.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

/// Crossing-number point-in-polygon test, one pixel at a time.
inline bool inside(const polyqd::Polygon& p, double x, double y) {
  bool in = false;
  const std::size_t n = p.vertices.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& vi = p.vertices[i];
    const auto& vj = p.vertices[j];
    // edge j -> i
    if ((vj.y > y) != (vi.y > y)) {
      const double xc = vj.x + (y - vj.y) * (vi.x - vj.x) / (vi.y - vj.y);
      if (xc > x) in = !in;
    }
  }
  return in;
}

inline std::vector<std::vector<bool>> raster(const polyqd::Polygon& p) {
  std::vector<std::vector<bool>> px(64, std::vector<bool>(64, false));
  for (std::size_t j = 0; j < 64; ++j)
    for (std::size_t i = 0; i < 64; ++i)
      px[j][i] = inside(p, -1.0 + (i + 0.5) / 32.0, -1.0 + (j + 0.5) / 32.0);
  return px;
}

inline std::size_t count_set(const polyqd::Bitmap& b) {
  std::size_t n = 0;
  for (std::size_t j = 0; j < 64; ++j)
    for (std::size_t i = 0; i < 64; ++i) n += b.get(i, j) ? 1 : 0;
  return n;
}

inline std::size_t differing_pixels(const polyqd::Bitmap& a, const polyqd::Bitmap& b) {
  std::size_t n = 0;
  for (std::size_t j = 0; j < 64; ++j)
    for (std::size_t i = 0; i < 64; ++i) n += a.get(i, j) != b.get(i, j) ? 1 : 0;
  return n;
}

/// Arc-length sample at parameter s, walking edges from vertex 0.
inline polyqd::Point point_at(const polyqd::Polygon& p, double s) {
  for (std::size_t i = 0; i < 8; ++i) {
    const auto a = p.vertices[i];
    const auto b = p.vertices[(i + 1) % 8];
    const double len = std::sqrt((b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y));
    if (s <= len || i == 7) {
      const double t = len > 0 ? s / len : 0.0;
      return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
    }
    s -= len;
  }
  return p.vertices[0];
}

/// Straightforward symmetry error: sample n points, sum opposite-pair
/// distances to the origin reflection.
inline double symmetry_error(const polyqd::Polygon& p, std::size_t n = 1000) {
  double per = 0.0;
  for (std::size_t i = 0; i < 8; ++i) {
    const auto a = p.vertices[i];
    const auto b = p.vertices[(i + 1) % 8];
    per += std::sqrt((b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y));
  }
  double e = 0.0;
  for (std::size_t j = 0; j < n / 2; ++j) {
    const auto a = point_at(p, per * j / n);
    const auto b = point_at(p, per * (j + n / 2) / n);
    e += std::sqrt((a.x + b.x) * (a.x + b.x) + (a.y + b.y) * (a.y + b.y));
  }
  return e;
}

inline double sdnn(const Matrix& d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < d.size(); ++j)
      if (i != j && d[i][j] < m) m = d[i][j];
    s += m;
  }
  return s;
}

/// Pure diversity by its recursive definition, memoized over subsets.
/// Exponential; n <= 20.
inline double pure_diversity_exact(const Matrix& d) {
  const std::size_t n = d.size();
  if (n <= 1) return 0.0;
  const std::uint32_t full = (1u << n) - 1u;
  std::vector<double> pd(full + 1u, -1.0);
  for (std::size_t i = 0; i < n; ++i) pd[1u << i] = 0.0;
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    if (pd[mask] >= 0.0) continue;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!((mask >> i) & 1u)) continue;
      const std::uint32_t rest = mask & ~(1u << i);
      double dis = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j)
        if ((rest >> j) & 1u) dis = std::min(dis, d[i][j]);
      best = std::max(best, pd[rest] + dis);
    }
    pd[mask] = best;
  }
  return pd[full];
}

inline double l_fractional(const std::vector<double>& a, const std::vector<double>& b, double p) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::pow(std::fabs(a[k] - b[k]), p);
  return std::pow(s, 1.0 / p);
}

/// Fronts by repeated O(N^2) scans of the remaining set (O(N^3) overall).
inline std::vector<std::vector<std::size_t>> fronts(const std::vector<std::vector<double>>& pts) {
  auto dom = [](const std::vector<double>& a, const std::vector<double>& b) {
    bool strict = false;
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (a[k] > b[k]) return false;
      if (a[k] < b[k]) strict = true;
    }
    return strict;
  };
  std::vector<bool> taken(pts.size(), false);
  std::vector<std::vector<std::size_t>> out;
  std::size_t left = pts.size();
  while (left) {
    std::vector<std::size_t> f;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (taken[i]) continue;
      bool dominated = false;
      for (std::size_t j = 0; j < pts.size() && !dominated; ++j)
        if (!taken[j] && j != i && dom(pts[j], pts[i])) dominated = true;
      if (!dominated) f.push_back(i);
    }
    for (auto i : f) taken[i] = true;
    left -= f.size();
    out.push_back(f);
  }
  return out;
}

/// Exact star discrepancy of a 2-D point set, by checking every anchored
/// box whose corner coordinates come from the points (plus 1).
inline double star_discrepancy_2d(const std::vector<std::pair<double, double>>& pts) {
  std::vector<double> xs{1.0}, ys{1.0};
  for (auto [x, y] : pts) {
    xs.push_back(x);
    ys.push_back(y);
  }
  const double n = static_cast<double>(pts.size());
  double worst = 0.0;
  for (double bx : xs)
    for (double by : ys) {
      std::size_t open = 0, closed = 0;
      for (auto [x, y] : pts) {
        if (x < bx && y < by) ++open;
        if (x <= bx && y <= by) ++closed;
      }
      const double vol = bx * by;
      worst = std::max({worst, vol - open / n, closed / n - vol});
    }
  return worst;
}

}  // namespace oracle

#endif  // POLYQD_TESTS_ORACLES_HPP
