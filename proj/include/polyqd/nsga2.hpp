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
 * \file polyqd/nsga2.hpp
 *
 * \brief NSGA-II on the polygon features: maximize area, minimize
 *  circumference. Objectives are stored minimized, i.e. (-A, l).
 */

#ifndef POLYQD_NSGA2_HPP
#define POLYQD_NSGA2_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "polyqd/evaluation.hpp"
#include "polyqd/sampling.hpp"

namespace polyqd {

using Objectives = std::vector<double>;  // all minimized

/// a dominates b: no worse everywhere, strictly better somewhere.
inline bool dominates(const Objectives& a, const Objectives& b) {
  bool strictly = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] > b[k]) return false;
    if (a[k] < b[k]) strictly = true;
  }
  return strictly;
}

/// Fast non-dominated sort. Fronts hold indices in ascending order.
inline std::vector<std::vector<std::size_t>> nondominated_sort(const std::vector<Objectives>& pts) {
  const std::size_t n = pts.size();
  if (n == 0) return {};
  const std::size_t m = pts.front().size();
  for (const auto& p : pts)
    if (p.size() != m) throw DimensionError("nondominated_sort: inconsistent objective dimension");

  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<std::size_t> count(n, 0);
  std::vector<std::vector<std::size_t>> fronts(1);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      if (p == q) continue;
      if (dominates(pts[p], pts[q])) dominated[p].push_back(q);
      else if (dominates(pts[q], pts[p])) ++count[p];
    }
    if (count[p] == 0) fronts[0].push_back(p);
  }
  for (std::size_t f = 0; !fronts[f].empty(); ++f) {
    std::vector<std::size_t> next;
    for (auto p : fronts[f])
      for (auto q : dominated[p])
        if (--count[q] == 0) next.push_back(q);
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(next));
  }
  fronts.pop_back();
  return fronts;
}

/// Crowding distance within one front. Extremes of every objective get
/// +inf; interior points sum their normalized neighbor gaps.
inline std::vector<double> crowding_distance(const std::vector<Objectives>& front) {
  const std::size_t n = front.size();
  std::vector<double> cd(n, 0.0);
  if (n == 0) return cd;
  if (n <= 2) {
    std::fill(cd.begin(), cd.end(), std::numeric_limits<double>::infinity());
    return cd;
  }
  const std::size_t m = front.front().size();
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < m; ++k) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return front[a][k] < front[b][k]; });
    const double lo = front[order.front()][k];
    const double hi = front[order.back()][k];
    cd[order.front()] = std::numeric_limits<double>::infinity();
    cd[order.back()] = std::numeric_limits<double>::infinity();
    if (!(hi > lo)) continue;
    for (std::size_t i = 1; i + 1 < n; ++i)
      cd[order[i]] += (front[order[i + 1]][k] - front[order[i - 1]][k]) / (hi - lo);
  }
  return cd;
}

struct NSGA2Config {
  std::size_t population = 400;
  std::size_t generations = 1024;
  double crossover_prob = 0.9;
  double mutation_prob_per_gene = 1.0 / 16.0;
  double mutation_sigma_fraction = 0.10;
  double sbx_eta = 20.0;
  DomainBounds bounds;
  std::uint64_t seed = 1;

  void validate() const {
    if (population < 2) throw std::invalid_argument("NSGA2Config: population must be >= 2");
    if (generations == 0) throw std::invalid_argument("NSGA2Config: generations must be >= 1");
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(crossover_prob) || !prob(mutation_prob_per_gene))
      throw std::invalid_argument("NSGA2Config: probabilities must lie in [0, 1]");
    if (!(mutation_sigma_fraction >= 0.0)) throw std::invalid_argument("NSGA2Config: negative sigma");
  }

  [[nodiscard]] std::size_t evaluation_budget() const { return population * (generations + 1); }
};

struct Individual {
  Evaluation eval;
  Objectives objectives;
  std::size_t rank = 0;
  double crowding = 0.0;
};

inline Objectives polygon_objectives(const Evaluation& e) {
  return {-e.features.area, e.features.circumference};
}

/// Assigns rank and crowding to every individual in place.
inline void assign_rank_and_crowding(std::vector<Individual>& pop) {
  std::vector<Objectives> objs;
  objs.reserve(pop.size());
  for (const auto& ind : pop) objs.push_back(ind.objectives);
  const auto fronts = nondominated_sort(objs);
  for (std::size_t f = 0; f < fronts.size(); ++f) {
    std::vector<Objectives> fo;
    for (auto i : fronts[f]) fo.push_back(objs[i]);
    const auto cd = crowding_distance(fo);
    for (std::size_t k = 0; k < fronts[f].size(); ++k) {
      pop[fronts[f][k]].rank = f;
      pop[fronts[f][k]].crowding = cd[k];
    }
  }
}

/// (mu + lambda) survivor selection: whole fronts while they fit, the
/// split front by descending crowding (stable by index).
inline std::vector<Individual> select_survivors(std::vector<Individual> merged, std::size_t mu) {
  std::vector<Objectives> objs;
  objs.reserve(merged.size());
  for (const auto& ind : merged) objs.push_back(ind.objectives);
  const auto fronts = nondominated_sort(objs);
  std::vector<Individual> next;
  next.reserve(mu);
  for (std::size_t f = 0; f < fronts.size() && next.size() < mu; ++f) {
    std::vector<Objectives> fo;
    for (auto i : fronts[f]) fo.push_back(objs[i]);
    const auto cd = crowding_distance(fo);
    std::vector<std::size_t> order(fronts[f].size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (next.size() + order.size() > mu)
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cd[a] > cd[b]; });
    for (auto k : order) {
      if (next.size() == mu) break;
      Individual ind = std::move(merged[fronts[f][k]]);
      ind.rank = f;
      ind.crowding = cd[k];
      next.push_back(std::move(ind));
    }
  }
  return next;
}

/// Simulated binary crossover, applied per gene with probability 1/2, then
/// clipped to bounds.
template <typename Rng>
std::pair<Genome, Genome> sbx_crossover(const Genome& a, const Genome& b, double eta,
                                        const DomainBounds& bounds, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Genome c1 = a, c2 = b;
  for (std::size_t k = 0; k < kGenes; ++k) {
    if (unif(rng) > 0.5) continue;
    const double u = unif(rng);
    const double beta = u <= 0.5 ? std::pow(2.0 * u, 1.0 / (eta + 1.0))
                                 : std::pow(1.0 / (2.0 * (1.0 - u)), 1.0 / (eta + 1.0));
    const double x1 = a.genes[k], x2 = b.genes[k];
    c1.genes[k] = 0.5 * ((1.0 + beta) * x1 + (1.0 - beta) * x2);
    c2.genes[k] = 0.5 * ((1.0 - beta) * x1 + (1.0 + beta) * x2);
  }
  clip_to_bounds(c1, bounds);
  clip_to_bounds(c2, bounds);
  return {c1, c2};
}

using NSGA2Observer = std::function<void(std::size_t generation, const std::vector<Individual>&)>;

/// Standard generational NSGA-II. Evaluations total population * (generations + 1).
inline std::vector<Individual> nsga2_run(const NSGA2Config& cfg, const NSGA2Observer& observe = {}) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, cfg.population - 1);

  auto make = [&](const Genome& g) {
    Individual ind;
    ind.eval = evaluate(g, cfg.bounds);
    ind.objectives = polygon_objectives(ind.eval);
    return ind;
  };

  std::vector<Individual> pop;
  pop.reserve(cfg.population);
  for (const auto& g : sobol_genomes(cfg.population, cfg.bounds)) pop.push_back(make(g));
  assign_rank_and_crowding(pop);
  if (observe) observe(0, pop);

  auto tournament = [&]() -> const Individual& {
    const auto& a = pop[pick(rng)];
    const auto& b = pop[pick(rng)];
    if (a.rank != b.rank) return a.rank < b.rank ? a : b;
    return a.crowding >= b.crowding ? a : b;
  };
  auto mutate = [&](Genome& g) {
    for (std::size_t k = 0; k < kGenes; ++k)
      if (unif(rng) < cfg.mutation_prob_per_gene)
        g.genes[k] += normal(rng) * cfg.mutation_sigma_fraction * cfg.bounds.range(k);
    clip_to_bounds(g, cfg.bounds);
  };

  for (std::size_t gen = 1; gen <= cfg.generations; ++gen) {
    std::vector<Individual> merged = pop;
    merged.reserve(2 * cfg.population);
    while (merged.size() < 2 * cfg.population) {
      Genome c1 = tournament().eval.genome;
      Genome c2 = tournament().eval.genome;
      if (unif(rng) < cfg.crossover_prob) std::tie(c1, c2) = sbx_crossover(c1, c2, cfg.sbx_eta, cfg.bounds, rng);
      mutate(c1);
      mutate(c2);
      merged.push_back(make(c1));
      if (merged.size() < 2 * cfg.population) merged.push_back(make(c2));
    }
    pop = select_survivors(std::move(merged), cfg.population);
    if (observe) observe(gen, pop);
  }
  return pop;
}

}  // namespace polyqd

#endif  // POLYQD_NSGA2_HPP
