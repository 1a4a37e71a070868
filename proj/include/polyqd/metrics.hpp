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
 * \file polyqd/metrics.hpp
 *
 * \brief Distance-based diversity indicators: sum of distances to nearest
 *  neighbor (SDNN), Solow-Polasky diversity (SPD) and pure diversity (PD).
 *
 * Every indicator works on a dense symmetric distance matrix, so the same
 * code serves genomes (Euclidean / fractional norm) and bitmaps (normalized
 * Hamming).
 */

#ifndef POLYQD_METRICS_HPP
#define POLYQD_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "polyqd/geometry.hpp"

namespace polyqd {

enum class Space { genetic, phenotypic };

struct MetricConfig {
  double spd_theta_genetic = 1.0;
  double spd_theta_phenotypic = 100.0;
  double pd_norm_exponent = 0.1;
  double ridge = 1e-9;

  [[nodiscard]] double spd_theta(Space s) const {
    return s == Space::genetic ? spd_theta_genetic : spd_theta_phenotypic;
  }
};

/// Row-major symmetric N x N matrix with a zero diagonal.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, 0.0) {}

  template <typename Item, typename Dist>
  static DistanceMatrix build(std::span<const Item> items, Dist&& dist) {
    DistanceMatrix m(items.size());
    for (std::size_t i = 0; i < m.n_; ++i)
      for (std::size_t j = i + 1; j < m.n_; ++j) m.set(i, j, dist(items[i], items[j]));
    return m;
  }

  [[nodiscard]] std::size_t size() const { return n_; }
  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double v) {
    d_[i * n_ + j] = v;
    d_[j * n_ + i] = v;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> d_;
};

/// (sum_k |a_k - b_k|^p)^(1/p); with p < 1 this is a dissimilarity, not a norm.
inline double l_fractional_dissimilarity(std::span<const double> a, std::span<const double> b,
                                         double p = 0.1) {
  if (a.size() != b.size()) throw DimensionError("l_fractional_dissimilarity: length mismatch");
  if (!(p > 0.0)) throw std::invalid_argument("l_fractional_dissimilarity: p must be positive");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::pow(std::abs(a[k] - b[k]), p);
  return std::pow(s, 1.0 / p);
}

inline double l_fractional_dissimilarity(const Genome& a, const Genome& b, double p = 0.1) {
  return l_fractional_dissimilarity(std::span<const double>(a.genes), std::span<const double>(b.genes), p);
}

// ---------------------------------------------------------------------------

inline double sdnn(const DistanceMatrix& d) {
  const std::size_t n = d.size();
  if (n < 2) throw std::invalid_argument("sdnn: need at least two items");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) best = std::min(best, d(i, j));
    sum += best;
  }
  return sum;
}

/// Effective number of species, 1^T M^-1 1 with M_ij = exp(-theta d_ij).
/// Duplicates make M singular. When the plain Cholesky factorization fails
/// or its reciprocal condition estimate drops below 1e-12, the system is
/// solved with M + eps I, eps escalated from `ridge` by x10 up to 1e-3. The
/// result is clamped to [1, N].
inline double solow_polasky(const DistanceMatrix& d, double theta, double ridge = 1e-9) {
  const std::size_t n = d.size();
  if (n == 0) throw std::invalid_argument("solow_polasky: empty set");
  if (!(theta > 0.0)) throw std::invalid_argument("solow_polasky: theta must be positive");
  if (n == 1) return 1.0;

  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd m(N, N);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < N; ++j)
      m(i, j) = std::exp(-theta * d(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(N);

  double value = std::numeric_limits<double>::quiet_NaN();
  {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success && llt.rcond() > 1e-12) {
      const double s = llt.solve(ones).sum();
      if (std::isfinite(s)) return std::clamp(s, 1.0, static_cast<double>(n));
    }
  }
  for (double eps = ridge; eps <= 1e-3 * (1.0 + 1e-12); eps *= 10.0) {
    Eigen::MatrixXd a = m;
    a.diagonal().array() += eps;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) continue;
    const Eigen::VectorXd x = llt.solve(ones);
    const double s = x.sum();
    if (std::isfinite(s)) {
      value = s;
      break;
    }
  }
  if (!std::isfinite(value)) {
    // Last resort: rank-revealing solve of the ridge-regularized system.
    Eigen::MatrixXd a = m;
    a.diagonal().array() += 1e-3;
    value = a.completeOrthogonalDecomposition().solve(ones).sum();
  }
  return std::clamp(value, 1.0, static_cast<double>(n));
}

/// Pure diversity, PD(X) = max_i [PD(X \ x_i) + min_{y in X\x_i} D(x_i, y)],
/// PD(singleton) = 0.
///
/// Read in insertion order, the recursion maximizes over orderings the sum
/// of each item's distance to the items placed before it. This evaluates the
/// farthest-insertion ordering from every start item and keeps the best,
/// O(N^3). It is exact for N <= 4 and a lower bound on the recursion above
/// that. Ties pick the lowest index.
inline double pure_diversity(const DistanceMatrix& d) {
  const std::size_t n = d.size();
  if (n == 0) throw std::invalid_argument("pure_diversity: empty set");
  if (n == 1) return 0.0;

  std::vector<double> to_set(n);
  std::vector<char> placed(n);
  double best = 0.0;
  for (std::size_t start = 0; start < n; ++start) {
    std::fill(placed.begin(), placed.end(), 0);
    placed[start] = 1;
    for (std::size_t i = 0; i < n; ++i) to_set[i] = d(i, start);
    double total = 0.0;
    for (std::size_t step = 1; step < n; ++step) {
      std::size_t pick = n;
      for (std::size_t i = 0; i < n; ++i)
        if (!placed[i] && (pick == n || to_set[i] > to_set[pick])) pick = i;
      total += to_set[pick];
      placed[pick] = 1;
      for (std::size_t i = 0; i < n; ++i)
        if (!placed[i]) to_set[i] = std::min(to_set[i], d(i, pick));
    }
    best = std::max(best, total);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Genome and bitmap conveniences.

inline DistanceMatrix genetic_distances(std::span<const Genome> g) {
  return DistanceMatrix::build(g, [](const Genome& a, const Genome& b) { return euclidean(a, b); });
}

inline DistanceMatrix genetic_dissimilarities(std::span<const Genome> g, double p = 0.1) {
  return DistanceMatrix::build(g, [p](const Genome& a, const Genome& b) {
    return l_fractional_dissimilarity(a, b, p);
  });
}

inline DistanceMatrix phenotypic_distances(std::span<const Bitmap> b) {
  return DistanceMatrix::build(b, [](const Bitmap& x, const Bitmap& y) { return hamming(x, y); });
}

struct DiversityValues {
  double sdnn = 0.0;
  double spd = 0.0;
  double pd = 0.0;
};

/// SDNN and SPD on Euclidean genome distances, PD on the fractional norm.
inline DiversityValues genetic_diversity(std::span<const Genome> g, const MetricConfig& cfg = {}) {
  const auto d = genetic_distances(g);
  DiversityValues v;
  v.sdnn = g.size() >= 2 ? sdnn(d) : 0.0;
  v.spd = solow_polasky(d, cfg.spd_theta_genetic, cfg.ridge);
  v.pd = pure_diversity(genetic_dissimilarities(g, cfg.pd_norm_exponent));
  return v;
}

/// All three indicators on normalized Hamming distances.
inline DiversityValues phenotypic_diversity(std::span<const Bitmap> b, const MetricConfig& cfg = {}) {
  const auto d = phenotypic_distances(b);
  DiversityValues v;
  v.sdnn = b.size() >= 2 ? sdnn(d) : 0.0;
  v.spd = solow_polasky(d, cfg.spd_theta_phenotypic, cfg.ridge);
  v.pd = pure_diversity(d);
  return v;
}

}  // namespace polyqd

#endif  // POLYQD_METRICS_HPP
