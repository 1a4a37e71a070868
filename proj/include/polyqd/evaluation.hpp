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

#ifndef POLYQD_EVALUATION_HPP
#define POLYQD_EVALUATION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "polyqd/archive.hpp"
#include "polyqd/geometry.hpp"

namespace polyqd {

/// One expressed and scored genome.
struct Evaluation {
  Genome genome;
  Polygon polygon;
  Bitmap bitmap;
  Features features;
  double fitness = 0.0;
};

/// Symmetry fitness, extended to zero-perimeter polygons by its limit (1).
inline double shape_fitness(const Polygon& p) {
  if (!(p.perimeter() > 0.0)) return 1.0;
  return symmetry_fitness(p);
}

inline Evaluation evaluate(const Genome& g, const DomainBounds& b) {
  Evaluation e;
  e.genome = g;
  e.polygon = express(g, b);
  e.bitmap = rasterize(e.polygon);
  e.features = features(e.polygon, e.bitmap);
  e.fitness = shape_fitness(e.polygon);
  return e;
}

inline std::vector<Evaluation> evaluate_all(std::span<const Genome> gs, const DomainBounds& b) {
  std::vector<Evaluation> out;
  out.reserve(gs.size());
  for (const auto& g : gs) out.push_back(evaluate(g, b));
  return out;
}

/// Upper bound on the circumference of any admissible polygon. Each edge
/// spans at most the chord between two radius-rmax points whose angular gap
/// is at most 2*pi/8 plus the angular range; with negative radii allowed a
/// point can sit anywhere on the circle and the bound is the diameter.
inline double max_circumference(const DomainBounds& b) {
  const double rmax = std::max(std::abs(b.radial_min), std::abs(b.radial_max));
  double chord = 2.0 * rmax;
  if (b.radial_min >= 0.0) {
    const double gap = 2.0 * std::numbers::pi / kControlPoints +
                       (b.angular_max - b.angular_min) * std::numbers::pi;
    chord = 2.0 * rmax * std::sin(std::min(std::numbers::pi / 2.0, gap / 2.0));
  }
  return static_cast<double>(kControlPoints) * chord;
}

enum class DescriptorMode { genetic, feature, latent };

inline std::string to_string(DescriptorMode m) {
  switch (m) {
    case DescriptorMode::genetic: return "genetic";
    case DescriptorMode::feature: return "feature";
    case DescriptorMode::latent: return "latent";
  }
  return "?";
}

inline DescriptorMode descriptor_mode_from_string(const std::string& s) {
  if (s == "genetic") return DescriptorMode::genetic;
  if (s == "feature") return DescriptorMode::feature;
  if (s == "latent") return DescriptorMode::latent;
  throw std::invalid_argument("unknown descriptor mode '" + s + "'");
}

inline std::vector<double> genetic_descriptor(const Evaluation& e) {
  return {e.genome.genes.begin(), e.genome.genes.end()};
}

/// (area, circumference / max_circumference), both in [0, 1].
inline std::vector<double> feature_descriptor(const Evaluation& e, const DomainBounds& b) {
  return {e.features.area, e.features.circumference / max_circumference(b)};
}

inline Elite to_elite(Evaluation e, std::vector<double> descriptor) {
  Elite el;
  el.genome = e.genome;
  el.descriptor = std::move(descriptor);
  el.fitness = e.fitness;
  el.bitmap = e.bitmap;
  el.features = e.features;
  return el;
}

/// Per-gene N(0, (sigma_fraction * range)^2) perturbation, clipped to bounds.
template <typename Rng>
Genome gaussian_mutate(const Genome& g, double sigma_fraction, const DomainBounds& b, Rng& rng) {
  Genome out = g;
  if (sigma_fraction == 0.0) return out;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < kGenes; ++k) {
    out.genes[k] += normal(rng) * sigma_fraction * b.range(k);
    out.genes[k] = std::clamp(out.genes[k], b.lower(k), b.upper(k));
  }
  return out;
}

}  // namespace polyqd

#endif  // POLYQD_EVALUATION_HPP
