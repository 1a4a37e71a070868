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

#ifndef POLYQD_RLS_HPP
#define POLYQD_RLS_HPP

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "polyqd/evaluation.hpp"
#include "polyqd/local_search.hpp"
#include "polyqd/sampling.hpp"

namespace polyqd {

struct RLSConfig {
  std::size_t restarts = 400;
  double step_size = 0.065;  ///< rho
  std::size_t max_evals_per_restart = 1025;
  DomainBounds bounds;
  std::uint64_t seed = 1;

  void validate() const {
    if (restarts == 0) throw std::invalid_argument("RLSConfig: restarts must be >= 1");
    if (!(step_size > 0.0)) throw std::invalid_argument("RLSConfig: step_size must be positive");
    if (max_evals_per_restart == 0) throw std::invalid_argument("RLSConfig: max_evals_per_restart must be >= 1");
  }

  [[nodiscard]] std::size_t evaluation_budget() const { return restarts * max_evals_per_restart; }
};

struct RLSResult {
  Evaluation eval;
  std::size_t evaluations = 0;
};

/// Scramble key for the restart stream, distinct from the (unscrambled)
/// initialization stream.
inline std::uint64_t rls_scramble_seed(std::uint64_t seed) { return seed * 0x9E3779B97F4A7C15ULL + 0x5851F42D4C957F2DULL; }

/// Restart 0 starts at the center of the box; restart k > 0 starts at point
/// k - 1 of a scrambled Sobol stream.
inline std::vector<RLSResult> rls_run(const RLSConfig& cfg) {
  cfg.validate();
  LocalSearchOptions opt;
  opt.rho = cfg.step_size;
  opt.max_evaluations = cfg.max_evals_per_restart;

  SobolGenerator starts(kGenes, rls_scramble_seed(cfg.seed));
  std::vector<RLSResult> out;
  out.reserve(cfg.restarts);
  for (std::size_t k = 0; k < cfg.restarts; ++k) {
    const Genome start = k == 0 ? Genome::center_of(cfg.bounds) : scale_to_bounds(starts.next(), cfg.bounds);
    const auto ls = symmetry_local_search(start, cfg.bounds, opt);
    RLSResult r;
    r.eval = evaluate(ls.genome, cfg.bounds);
    r.evaluations = ls.evaluations;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace polyqd

#endif  // POLYQD_RLS_HPP
