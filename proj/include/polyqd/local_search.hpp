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
 * \file polyqd/local_search.hpp
 *
 * \brief Box-constrained quasi-Newton ascent on the symmetry fitness.
 *
 * The fitness is 1 / (1 + E) where E is a sum of Euclidean norms of 2-D
 * residuals. E has a kink wherever a residual vanishes, which stalls
 * curvature updates built from the scalar fitness. The search therefore
 * models the residuals themselves: a Levenberg-Marquardt step on
 * 0.5 * sum ||r_j||^2 with a central-difference Jacobian, projected onto the
 * box, inside a trust radius that starts at rho * ||range||. A step is kept
 * only if the fitness strictly increases, so the fitness trajectory never
 * decreases.
 */

#ifndef POLYQD_LOCAL_SEARCH_HPP
#define POLYQD_LOCAL_SEARCH_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "polyqd/geometry.hpp"

namespace polyqd {

struct LocalSearchOptions {
  double rho = 0.065;                ///< initial trust radius, fraction of the range norm
  std::size_t max_evaluations = 1025;
  double fd_step_fraction = 1e-4;    ///< finite-difference step, fraction of each gene range
  double gradient_tolerance = 1e-6;
  double relative_improvement_tolerance = 1e-10;
};

struct LocalSearchResult {
  Genome genome;
  double fitness = 0.0;
  std::size_t evaluations = 0;
  std::vector<double> trajectory;  ///< fitness after each accepted step, start included
};

/// Point-symmetry residuals of a genome; empty for zero-perimeter shapes.
inline std::vector<Point> genome_symmetry_residuals(const Genome& g) {
  const auto p = express_unchecked(g);
  if (!(p.perimeter() > 0.0)) return {};
  return symmetry_residuals(p);
}

/// `residuals(genome)` returns the 2-D residual vectors; one call is one
/// evaluation.
template <typename ResidualFn>
LocalSearchResult local_search(const Genome& start, ResidualFn&& residuals, const DomainBounds& bounds,
                               const LocalSearchOptions& opt = {}) {
  using Eigen::Index;
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  constexpr Index kN = static_cast<Index>(kGenes);

  LocalSearchResult res;
  std::size_t evals = 0;
  auto eval = [&](const Genome& g) {
    ++evals;
    return residuals(g);
  };
  auto error_of = [](const std::vector<Point>& r) { return symmetry_error(r); };

  Genome x = start;
  clip_to_bounds(x, bounds);
  if (opt.max_evaluations == 0) {
    res.genome = x;
    return res;
  }
  std::vector<Point> r = eval(x);
  double e = error_of(r);
  res.trajectory.push_back(1.0 / (1.0 + e));

  double range_norm = 0.0;
  for (std::size_t k = 0; k < kGenes; ++k) range_norm += bounds.range(k) * bounds.range(k);
  range_norm = std::sqrt(range_norm);
  double radius = opt.rho * range_norm;
  double damping = 1e-3;

  const std::size_t per_jacobian = 2 * kGenes;
  while (e > 0.0 && evals + per_jacobian + 1 <= opt.max_evaluations) {
    const Index m = static_cast<Index>(2 * r.size());
    MatrixXd jac(m, kN);
    for (std::size_t k = 0; k < kGenes; ++k) {
      const double h = opt.fd_step_fraction * bounds.range(k);
      Genome xp = x, xm = x;
      xp.genes[k] = std::min(bounds.upper(k), x.genes[k] + h);
      xm.genes[k] = std::max(bounds.lower(k), x.genes[k] - h);
      const auto rp = eval(xp);
      const auto rm = eval(xm);
      const double span = xp.genes[k] - xm.genes[k];
      for (std::size_t j = 0; j < r.size(); ++j) {
        // Degenerate neighbors (zero perimeter) contribute a zero residual.
        const Point a = j < rp.size() ? rp[j] : Point{};
        const Point b = j < rm.size() ? rm[j] : Point{};
        jac(static_cast<Index>(2 * j), static_cast<Index>(k)) = (a.x - b.x) / span;
        jac(static_cast<Index>(2 * j + 1), static_cast<Index>(k)) = (a.y - b.y) / span;
      }
    }
    VectorXd rv(m);
    for (std::size_t j = 0; j < r.size(); ++j) {
      rv(static_cast<Index>(2 * j)) = r[j].x;
      rv(static_cast<Index>(2 * j + 1)) = r[j].y;
    }
    const VectorXd grad = jac.transpose() * rv;
    if (grad.norm() < opt.gradient_tolerance) break;
    const MatrixXd normal = jac.transpose() * jac;

    bool accepted = false;
    bool converged = false;
    while (evals < opt.max_evaluations) {
      MatrixXd a = normal;
      a.diagonal().array() += damping * (normal.diagonal().array() + 1e-12);
      VectorXd step = a.ldlt().solve(-grad);
      const double len = step.norm();
      if (!std::isfinite(len)) break;
      if (len > radius) step *= radius / len;

      Genome trial = x;
      for (std::size_t k = 0; k < kGenes; ++k) trial.genes[k] += step(static_cast<Index>(k));
      clip_to_bounds(trial, bounds);
      auto rt = eval(trial);
      const double et = error_of(rt);
      if (et < e) {
        converged = (e - et) <= opt.relative_improvement_tolerance * e;
        x = trial;
        r = std::move(rt);
        e = et;
        res.trajectory.push_back(1.0 / (1.0 + e));
        damping = std::max(damping * 0.1, 1e-12);
        radius = std::max(radius, 2.0 * step.norm());
        accepted = true;
        break;
      }
      damping *= 10.0;
      radius *= 0.25;
      if (radius < 1e-14 * range_norm) break;
    }
    if (!accepted || converged) break;
  }

  res.genome = x;
  res.fitness = 1.0 / (1.0 + e);
  res.evaluations = evals;
  return res;
}

/// Local search on the symmetry fitness of the polygon domain.
inline LocalSearchResult symmetry_local_search(const Genome& start, const DomainBounds& bounds,
                                               const LocalSearchOptions& opt = {}) {
  return local_search(start, genome_symmetry_residuals, bounds, opt);
}

}  // namespace polyqd

#endif  // POLYQD_LOCAL_SEARCH_HPP
