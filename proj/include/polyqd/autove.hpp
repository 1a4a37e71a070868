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
 * \file polyqd/autove.hpp
 *
 * \brief Voronoi-Elites on learned latent descriptors.
 *
 * Sobol genomes are expressed and their bitmaps train an autoencoder. VE
 * runs the first half of the generations on normalized latent codes, the
 * model is then fine-tuned on the bitmaps of the archive's elites, the
 * normalizer refitted on their codes, the archive re-described and pruned,
 * and VE runs the remaining generations.
 */

#ifndef POLYQD_AUTOVE_HPP
#define POLYQD_AUTOVE_HPP

#include <algorithm>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "polyqd/autoencoder.hpp"
#include "polyqd/evaluation.hpp"
#include "polyqd/sampling.hpp"
#include "polyqd/ve.hpp"

namespace polyqd {

struct AutoVEConfig {
  VEConfig ve;  ///< descriptor_mode is forced to latent
  TrainConfig train;
  int latent_dim = 2;
};

struct AutoVEResult {
  VEArchive archive;
  CAEModel<float> model;
  LatentNormalizer normalizer;
  std::vector<double> initial_loss;  ///< per-epoch history on the Sobol set
  std::vector<double> retrain_loss;  ///< per-epoch history on the elites
  std::size_t evaluations = 0;
};

namespace detail {

struct LatentState {
  CAEModel<float> model;
  LatentNormalizer norm;
};

inline std::vector<Bitmap> bitmaps_of(std::span<const Evaluation> es) {
  std::vector<Bitmap> b;
  b.reserve(es.size());
  for (const auto& e : es) b.push_back(e.bitmap);
  return b;
}

// Trains on `data` with the batch size capped at the corpus size, then refits
// the normalizer on the corpus codes.
inline std::vector<double> fit_latent(LatentState& s, const std::vector<Bitmap>& data, TrainConfig cfg) {
  cfg.batch_size = std::min(cfg.batch_size, data.size());
  auto history = train(s.model, std::span<const Bitmap>(data), cfg);
  s.norm = LatentNormalizer::fit(encode_all(s.model, std::span<const Bitmap>(data)));
  return history;
}

}  // namespace detail

/// Descriptor function reading the current model and normalizer of `state`.
inline BatchDescriptorFn make_latent_descriptor_fn(std::shared_ptr<detail::LatentState> state) {
  return [state](std::span<const Evaluation> es) {
    std::vector<std::vector<double>> d;
    d.reserve(es.size());
    for (const auto& e : es) d.push_back(latent_descriptor(state->model, state->norm, e.bitmap));
    return d;
  };
}

/// The model is initialized from ve.seed; shuffling follows train.seed.
/// Evaluations total capacity * (generations + 1), as for plain VE.
inline AutoVEResult autove_run(AutoVEConfig cfg) {
  cfg.ve.descriptor_mode = DescriptorMode::latent;
  cfg.ve.validate();
  cfg.train.validate();
  if (cfg.latent_dim < 1) throw std::invalid_argument("AutoVEConfig: latent_dim must be >= 1");

  auto initial = evaluate_all(sobol_genomes(cfg.ve.archive_capacity, cfg.ve.bounds), cfg.ve.bounds);
  auto state = std::make_shared<detail::LatentState>(
      detail::LatentState{CAEModel<float>(cfg.latent_dim, cfg.ve.seed), LatentNormalizer{}});
  AutoVEResult out{VEArchive(cfg.ve.archive_capacity, static_cast<std::size_t>(cfg.latent_dim)),
                   state->model, {}, {}, {}, 0};
  out.initial_loss = detail::fit_latent(*state, detail::bitmaps_of(initial), cfg.train);

  const auto dim = static_cast<std::size_t>(cfg.latent_dim);
  VoronoiElites ve(cfg.ve, make_latent_descriptor_fn(state), dim);
  ve.initialize_from(std::move(initial));
  const std::size_t first = cfg.ve.generations / 2;
  ve.run(first);

  std::vector<Bitmap> elites;
  for (const auto& e : ve.archive().elites()) elites.push_back(e.bitmap);
  out.retrain_loss = detail::fit_latent(*state, elites, cfg.train);
  ve.redescribe(make_latent_descriptor_fn(state), dim);
  ve.run(cfg.ve.generations - first);

  out.archive = ve.archive();
  out.model = state->model;
  out.normalizer = state->norm;
  out.evaluations = ve.evaluations();
  return out;
}

}  // namespace polyqd

#endif  // POLYQD_AUTOVE_HPP
