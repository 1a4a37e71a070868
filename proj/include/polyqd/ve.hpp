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
 * \file polyqd/ve.hpp
 *
 * \brief Voronoi-Elites driver: Sobol initialization, then per generation
 *  random parent selection, Gaussian mutation, evaluation, insertion and
 *  pruning. Mutation only, no crossover.
 */

#ifndef POLYQD_VE_HPP
#define POLYQD_VE_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "polyqd/archive.hpp"
#include "polyqd/evaluation.hpp"
#include "polyqd/sampling.hpp"

namespace polyqd {

struct VEConfig {
  std::size_t archive_capacity = 400;
  std::size_t generations = 1024;
  double mutation_sigma_fraction = 0.10;
  DescriptorMode descriptor_mode = DescriptorMode::feature;
  DomainBounds bounds;
  std::uint64_t seed = 1;

  void validate() const {
    if (archive_capacity == 0) throw std::invalid_argument("VEConfig: archive_capacity must be >= 1");
    if (generations == 0) throw std::invalid_argument("VEConfig: generations must be >= 1");
    if (!(mutation_sigma_fraction > 0.0 && mutation_sigma_fraction <= 1.0))
      throw std::invalid_argument("VEConfig: mutation_sigma_fraction must be in (0, 1]");
  }

  [[nodiscard]] std::size_t evaluation_budget() const { return archive_capacity * (generations + 1); }
};

/// Maps a batch of evaluations to descriptors of a fixed dimension.
using BatchDescriptorFn = std::function<std::vector<std::vector<double>>(std::span<const Evaluation>)>;

inline BatchDescriptorFn make_descriptor_fn(DescriptorMode mode, const DomainBounds& bounds) {
  switch (mode) {
    case DescriptorMode::genetic:
      return [](std::span<const Evaluation> es) {
        std::vector<std::vector<double>> d;
        d.reserve(es.size());
        for (const auto& e : es) d.push_back(genetic_descriptor(e));
        return d;
      };
    case DescriptorMode::feature:
      return [bounds](std::span<const Evaluation> es) {
        std::vector<std::vector<double>> d;
        d.reserve(es.size());
        for (const auto& e : es) d.push_back(feature_descriptor(e, bounds));
        return d;
      };
    case DescriptorMode::latent:
      break;
  }
  throw std::invalid_argument("make_descriptor_fn: latent descriptors need a trained model");
}

inline std::size_t descriptor_dimension(DescriptorMode mode) {
  return mode == DescriptorMode::genetic ? kGenes : 2;
}

class VoronoiElites {
 public:
  VoronoiElites(VEConfig cfg, BatchDescriptorFn describe, std::size_t descriptor_dim)
      : cfg_(std::move(cfg)),
        describe_(std::move(describe)),
        archive_(cfg_.archive_capacity, descriptor_dim),
        rng_(cfg_.seed) {
    cfg_.validate();
  }

  explicit VoronoiElites(const VEConfig& cfg)
      : VoronoiElites(cfg, make_descriptor_fn(cfg.descriptor_mode, cfg.bounds),
                      descriptor_dimension(cfg.descriptor_mode)) {}

  /// Evaluates the first `capacity` Sobol points and fills the archive.
  void initialize() {
    initialize_from(evaluate_all(sobol_genomes(cfg_.archive_capacity, cfg_.bounds), cfg_.bounds));
  }

  /// Seeds the archive with an evaluated initial population.
  void initialize_from(std::vector<Evaluation> evals) {
    insert_evaluated(std::move(evals));
    ++generation_;
  }

  void step() {
    const auto parents = archive_.select_random(cfg_.archive_capacity, rng_);
    std::vector<Genome> children;
    children.reserve(parents.size());
    for (const auto& p : parents)
      children.push_back(gaussian_mutate(p.genome, cfg_.mutation_sigma_fraction, cfg_.bounds, rng_));
    insert_evaluated(evaluate_all(children, cfg_.bounds));
    ++generation_;
  }

  void run(std::size_t generations) {
    for (std::size_t g = 0; g < generations; ++g) step();
  }

  /// Swaps the descriptor function, re-describes every elite and re-prunes.
  void redescribe(BatchDescriptorFn describe, std::size_t descriptor_dim) {
    describe_ = std::move(describe);
    std::vector<Evaluation> evals;
    evals.reserve(archive_.size());
    for (const auto& e : archive_.elites()) evals.push_back(as_evaluation(e));
    auto desc = describe_(evals);
    std::size_t i = 0;
    archive_.redescribe(descriptor_dim, [&](const Elite&) { return std::move(desc[i++]); });
    archive_.prune_to_capacity();
  }

  [[nodiscard]] const VEArchive& archive() const { return archive_; }
  [[nodiscard]] VEArchive& archive() { return archive_; }
  [[nodiscard]] std::size_t evaluations() const { return evaluations_; }
  [[nodiscard]] std::size_t generation() const { return generation_; }
  [[nodiscard]] const VEConfig& config() const { return cfg_; }

  static Evaluation as_evaluation(const Elite& e) {
    Evaluation ev;
    ev.genome = e.genome;
    ev.polygon = express_unchecked(e.genome);
    ev.bitmap = e.bitmap;
    ev.features = e.features;
    ev.fitness = e.fitness;
    return ev;
  }

 private:
  void insert_evaluated(std::vector<Evaluation> evals) {
    evaluations_ += evals.size();
    auto desc = describe_(evals);
    std::vector<Elite> batch;
    batch.reserve(evals.size());
    for (std::size_t i = 0; i < evals.size(); ++i) batch.push_back(to_elite(std::move(evals[i]), std::move(desc[i])));
    archive_.insert(std::move(batch));
    archive_.prune_to_capacity();
  }

  VEConfig cfg_;
  BatchDescriptorFn describe_;
  VEArchive archive_;
  std::mt19937_64 rng_;
  std::size_t evaluations_ = 0;
  std::size_t generation_ = 0;
};

/// Full run with genetic or feature descriptors. Evaluations total
/// capacity * (generations + 1).
inline VEArchive ve_run(const VEConfig& cfg) {
  cfg.validate();
  VoronoiElites ve(cfg);
  ve.initialize();
  ve.run(cfg.generations);
  return ve.archive();
}

}  // namespace polyqd

#endif  // POLYQD_VE_HPP
