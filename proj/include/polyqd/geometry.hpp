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
 * \file polyqd/geometry.hpp
 *
 * \brief Deformable octagon domain: genome expression, rasterization,
 *  shape features and the point-symmetry fitness.
 *
 * A genome holds 16 genes. Genes 0..7 are the control point radii, genes
 * 8..15 the angular deviations in units of pi radians. Control point i sits
 * at polar angle 2*pi*i/8 + theta_i*pi with radius r_i. Negative radii
 * reflect the point through the origin.
 *
 * The phenotype is a 64x64 binary raster of [-1,1]^2, pixel (0,0) at the
 * lower-left corner, filled with the even-odd rule at pixel centers.
 */

#ifndef POLYQD_GEOMETRY_HPP
#define POLYQD_GEOMETRY_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace polyqd {

inline constexpr std::size_t kControlPoints = 8;
inline constexpr std::size_t kGenes = 2 * kControlPoints;
inline constexpr std::size_t kRaster = 64;
inline constexpr std::size_t kPixels = kRaster * kRaster;
inline constexpr std::size_t kBoundarySamples = 1000;

class BoundsError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DegenerateShapeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Per-group gene bounds. Angular bounds are in units of pi radians.
struct DomainBounds {
  double radial_min = 0.0;
  double radial_max = 1.0;
  double angular_min = -0.125;
  double angular_max = 0.125;

  DomainBounds() = default;
  DomainBounds(double rmin, double rmax, double amin, double amax)
      : radial_min(rmin), radial_max(rmax), angular_min(amin), angular_max(amax) {
    if (!(rmin < rmax) || !(amin < amax))
      throw BoundsError("DomainBounds: min must be strictly below max");
  }

  [[nodiscard]] double lower(std::size_t gene) const {
    return gene < kControlPoints ? radial_min : angular_min;
  }
  [[nodiscard]] double upper(std::size_t gene) const {
    return gene < kControlPoints ? radial_max : angular_max;
  }
  [[nodiscard]] double range(std::size_t gene) const { return upper(gene) - lower(gene); }
  [[nodiscard]] double center(std::size_t gene) const {
    return 0.5 * (lower(gene) + upper(gene));
  }

  friend bool operator==(const DomainBounds&, const DomainBounds&) = default;
};

struct Genome {
  std::array<double, kGenes> genes{};

  [[nodiscard]] double radius(std::size_t i) const { return genes[i]; }
  [[nodiscard]] double angle(std::size_t i) const { return genes[kControlPoints + i]; }
  double& radius(std::size_t i) { return genes[i]; }
  double& angle(std::size_t i) { return genes[kControlPoints + i]; }

  [[nodiscard]] bool within(const DomainBounds& b) const {
    for (std::size_t k = 0; k < kGenes; ++k)
      if (!(genes[k] >= b.lower(k) && genes[k] <= b.upper(k))) return false;
    return true;
  }

  /// All radii set to r, all angular deviations set to theta.
  static Genome uniform(double r, double theta) {
    Genome g;
    for (std::size_t i = 0; i < kControlPoints; ++i) {
      g.radius(i) = r;
      g.angle(i) = theta;
    }
    return g;
  }

  static Genome center_of(const DomainBounds& b) {
    Genome g;
    for (std::size_t k = 0; k < kGenes; ++k) g.genes[k] = b.center(k);
    return g;
  }

  friend bool operator==(const Genome&, const Genome&) = default;
};

inline double euclidean(const Genome& a, const Genome& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < kGenes; ++k) {
    const double d = a.genes[k] - b.genes[k];
    s += d * d;
  }
  return std::sqrt(s);
}

inline void clip_to_bounds(Genome& g, const DomainBounds& b) {
  for (std::size_t k = 0; k < kGenes; ++k) g.genes[k] = std::clamp(g.genes[k], b.lower(k), b.upper(k));
}

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Polygon {
  std::array<Point, kControlPoints> vertices{};

  [[nodiscard]] double edge_length(std::size_t i) const {
    return distance(vertices[i], vertices[(i + 1) % kControlPoints]);
  }

  /// Sum of the 8 straight edges.
  [[nodiscard]] double perimeter() const {
    double l = 0.0;
    for (std::size_t i = 0; i < kControlPoints; ++i) l += edge_length(i);
    return l;
  }
};

/// 64x64 binary raster, one 64-bit word per row; bit i of row j is pixel (i, j).
class Bitmap {
 public:
  static constexpr std::size_t kSide = kRaster;

  [[nodiscard]] bool get(std::size_t i, std::size_t j) const { return (rows_[j] >> i) & 1u; }
  void set(std::size_t i, std::size_t j, bool v = true) {
    const std::uint64_t mask = std::uint64_t{1} << i;
    rows_[j] = v ? (rows_[j] | mask) : (rows_[j] & ~mask);
  }

  [[nodiscard]] std::size_t count() const {
    std::size_t n = 0;
    for (auto r : rows_) n += static_cast<std::size_t>(std::popcount(r));
    return n;
  }

  [[nodiscard]] Bitmap complement() const {
    Bitmap b;
    for (std::size_t j = 0; j < kSide; ++j) b.rows_[j] = ~rows_[j];
    return b;
  }

  [[nodiscard]] std::uint64_t row(std::size_t j) const { return rows_[j]; }
  void set_row(std::size_t j, std::uint64_t bits) { rows_[j] = bits; }

  /// Pixels as 0/1 reals, row-major from the bottom row.
  template <typename T>
  void to_values(std::span<T> out) const {
    for (std::size_t j = 0; j < kSide; ++j)
      for (std::size_t i = 0; i < kSide; ++i) out[j * kSide + i] = get(i, j) ? T(1) : T(0);
  }

  friend bool operator==(const Bitmap&, const Bitmap&) = default;

 private:
  std::array<std::uint64_t, kSide> rows_{};
};

/// Pixel-center coordinate of column/row index k in [-1,1].
inline constexpr double pixel_center(std::size_t k) {
  return -1.0 + (static_cast<double>(k) + 0.5) * (2.0 / static_cast<double>(kRaster));
}

struct Features {
  double area = 0.0;           ///< set-pixel fraction
  double circumference = 0.0;  ///< sum of edge lengths
};

// ---------------------------------------------------------------------------

inline Polygon express_unchecked(const Genome& g) {
  Polygon p;
  for (std::size_t i = 0; i < kControlPoints; ++i) {
    const double phi = 2.0 * std::numbers::pi * static_cast<double>(i) / kControlPoints +
                       g.angle(i) * std::numbers::pi;
    p.vertices[i] = {g.radius(i) * std::cos(phi), g.radius(i) * std::sin(phi)};
  }
  return p;
}

inline Polygon express(const Genome& g, const DomainBounds& b) {
  for (std::size_t k = 0; k < kGenes; ++k) {
    if (!(g.genes[k] >= b.lower(k) && g.genes[k] <= b.upper(k)))
      throw BoundsError("express: gene " + std::to_string(k) + " = " + std::to_string(g.genes[k]) +
                        " outside [" + std::to_string(b.lower(k)) + ", " +
                        std::to_string(b.upper(k)) + "]");
  }
  return express_unchecked(g);
}

/// Scanline even-odd fill. A pixel is set when the count of edge crossings
/// strictly right of its center, on the horizontal line through its center,
/// is odd. Edges use the half-open rule (a.y > y) != (b.y > y).
inline Bitmap rasterize(const Polygon& p) {
  Bitmap bm;
  std::array<double, kControlPoints> xs{};
  for (std::size_t j = 0; j < kRaster; ++j) {
    const double y = pixel_center(j);
    std::size_t n = 0;
    for (std::size_t e = 0; e < kControlPoints; ++e) {
      const Point a = p.vertices[e];
      const Point b = p.vertices[(e + 1) % kControlPoints];
      if ((a.y > y) != (b.y > y)) xs[n++] = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
    }
    if (n == 0) continue;
    std::sort(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(n));
    // crossings right of x = n - (number of crossings <= x)
    std::size_t left = 0;
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < kRaster; ++i) {
      const double x = pixel_center(i);
      while (left < n && xs[left] <= x) ++left;
      if ((n - left) & 1u) bits |= std::uint64_t{1} << i;
    }
    bm.set_row(j, bits);
  }
  return bm;
}

/// n points at arc-length spacing perimeter/n along the closed vertex loop,
/// the first at vertex 0.
inline std::vector<Point> boundary_samples(const Polygon& p, std::size_t n = kBoundarySamples) {
  std::array<double, kControlPoints + 1> cum{};
  std::array<double, kControlPoints> len{};
  for (std::size_t i = 0; i < kControlPoints; ++i) {
    len[i] = p.edge_length(i);
    cum[i + 1] = cum[i] + len[i];
  }
  const double perimeter = cum[kControlPoints];
  if (!(perimeter > 0.0)) throw DegenerateShapeError("boundary_samples: zero perimeter");
  if (n == 0) return {};

  std::vector<Point> out;
  out.reserve(n);
  const double step = perimeter / static_cast<double>(n);
  std::size_t e = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double s = static_cast<double>(j) * step;
    while (e + 1 < kControlPoints && cum[e + 1] <= s) ++e;
    const Point a = p.vertices[e];
    const Point b = p.vertices[(e + 1) % kControlPoints];
    const double t = len[e] > 0.0 ? (s - cum[e]) / len[e] : 0.0;
    out.push_back({a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t});
  }
  return out;
}

inline Features features(const Polygon& p, const Bitmap& b) {
  return {static_cast<double>(b.count()) / static_cast<double>(kPixels), p.perimeter()};
}

/// Per-pair point-symmetry residuals s_j + s_{j+n/2}, j < n/2. Their norms
/// sum to the symmetry error.
inline std::vector<Point> symmetry_residuals(const Polygon& p, std::size_t n = kBoundarySamples) {
  const auto s = boundary_samples(p, n);
  const std::size_t half = n / 2;
  std::vector<Point> r(half);
  for (std::size_t j = 0; j < half; ++j) r[j] = {s[j].x + s[j + half].x, s[j].y + s[j + half].y};
  return r;
}

inline double symmetry_error(std::span<const Point> residuals) {
  double e = 0.0;
  for (const auto& r : residuals) e += std::hypot(r.x, r.y);
  return e;
}

/// 1 / (1 + E_s), E_s = sum_j || s_j - reflect(s_{j+n/2}) ||.
inline double symmetry_fitness(const Polygon& p) {
  const auto r = symmetry_residuals(p);
  return 1.0 / (1.0 + symmetry_error(r));
}

/// Count of differing pixels.
inline std::size_t pixel_error(const Bitmap& a, const Bitmap& b) {
  std::size_t n = 0;
  for (std::size_t j = 0; j < kRaster; ++j) n += static_cast<std::size_t>(std::popcount(a.row(j) ^ b.row(j)));
  return n;
}

/// Normalized Hamming distance in [0,1].
inline double hamming(const Bitmap& a, const Bitmap& b) {
  return static_cast<double>(pixel_error(a, b)) / static_cast<double>(kPixels);
}

// ---------------------------------------------------------------------------
// Export

/// Plain PBM (P1); top output line is the top raster row.
inline void write_pbm(std::ostream& os, const Bitmap& b) {
  os << "P1\n" << kRaster << ' ' << kRaster << '\n';
  for (std::size_t jj = 0; jj < kRaster; ++jj) {
    const std::size_t j = kRaster - 1 - jj;
    for (std::size_t i = 0; i < kRaster; ++i) {
      if (i) os << ' ';
      os << (b.get(i, j) ? '1' : '0');
    }
    os << '\n';
  }
}

inline void write_polygon_csv(std::ostream& os, const Polygon& p) {
  auto old = os.precision(17);
  os << "x,y\n";
  for (const auto& v : p.vertices) os << v.x << ',' << v.y << '\n';
  os.precision(old);
}

}  // namespace polyqd

#endif  // POLYQD_GEOMETRY_HPP
