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
 * \file polyqd/sampling.hpp
 *
 * \brief Sobol' low-discrepancy sequence (Gray-code order, Joe-Kuo direction
 *  numbers) with an optional digital XOR scramble.
 */

#ifndef POLYQD_SAMPLING_HPP
#define POLYQD_SAMPLING_HPP

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "polyqd/geometry.hpp"

namespace polyqd {

namespace detail {

struct SobolPrimitive {
  std::uint32_t poly;  // primitive polynomial with leading and trailing 1 bits
  std::array<std::uint32_t, 8> m;  // initial direction integers
};

// new-joe-kuo-6.21201, dimensions 2..21. Dimension 1 is the van der Corput
// sequence and needs no entry.
inline constexpr std::array<SobolPrimitive, 20> kJoeKuo{{
    {3, {1}},
    {7, {1, 3}},
    {11, {1, 3, 1}},
    {13, {1, 1, 1}},
    {19, {1, 1, 3, 3}},
    {25, {1, 3, 5, 13}},
    {37, {1, 1, 5, 5, 17}},
    {41, {1, 1, 5, 5, 5}},
    {47, {1, 1, 7, 11, 19}},
    {55, {1, 1, 5, 1, 1}},
    {59, {1, 1, 1, 3, 11}},
    {61, {1, 3, 5, 5, 31}},
    {67, {1, 3, 3, 9, 7, 49}},
    {91, {1, 1, 1, 15, 21, 21}},
    {97, {1, 3, 1, 13, 27, 49}},
    {103, {1, 1, 1, 15, 7, 5}},
    {109, {1, 3, 1, 15, 13, 25}},
    {115, {1, 1, 5, 5, 19, 61}},
    {131, {1, 3, 7, 11, 23, 15, 103}},
    {137, {1, 3, 7, 13, 13, 15, 69}},
}};

}  // namespace detail

class SobolGenerator {
 public:
  static constexpr std::size_t kMaxDimension = detail::kJoeKuo.size() + 1;
  static constexpr int kBits = 32;

  explicit SobolGenerator(std::size_t dimension,
                          std::optional<std::uint64_t> scramble_seed = std::nullopt)
      : dim_(dimension), v_(dimension), x_(dimension, 0u), shift_(dimension, 0u) {
    if (dimension == 0 || dimension > kMaxDimension)
      throw std::out_of_range("SobolGenerator: dimension " + std::to_string(dimension) +
                              " outside supported range [1, " + std::to_string(kMaxDimension) +
                              "]");
    for (int b = 0; b < kBits; ++b) v_[0][b] = std::uint32_t{1} << (kBits - 1 - b);
    for (std::size_t d = 1; d < dim_; ++d) {
      const auto& prim = detail::kJoeKuo[d - 1];
      const int s = std::bit_width(prim.poly) - 1;
      const std::uint32_t a = (prim.poly >> 1) & ((std::uint32_t{1} << (s - 1)) - 1u);
      auto& v = v_[d];
      for (int b = 0; b < s && b < kBits; ++b) v[b] = prim.m[b] << (kBits - 1 - b);
      for (int b = s; b < kBits; ++b) {
        std::uint32_t w = v[b - s] ^ (v[b - s] >> s);
        for (int k = 1; k < s; ++k)
          if ((a >> (s - 1 - k)) & 1u) w ^= v[b - k];
        v[b] = w;
      }
    }
    if (scramble_seed) {
      std::mt19937_64 rng(*scramble_seed);
      for (auto& s : shift_) s = static_cast<std::uint32_t>(rng() >> 32);
    }
  }

  [[nodiscard]] std::size_t dimension() const { return dim_; }
  [[nodiscard]] std::uint64_t index() const { return index_; }

  /// Next point in [0,1)^dimension.
  std::vector<double> next() {
    std::vector<double> p(dim_);
    constexpr double kScale = 1.0 / 4294967296.0;
    for (std::size_t d = 0; d < dim_; ++d) p[d] = static_cast<double>(x_[d] ^ shift_[d]) * kScale;
    // Gray-code step: flip the direction number of the lowest zero bit of index.
    const int c = std::countr_one(index_);
    if (c >= kBits) throw std::overflow_error("SobolGenerator: sequence exhausted");
    for (std::size_t d = 0; d < dim_; ++d) x_[d] ^= v_[d][static_cast<std::size_t>(c)];
    ++index_;
    return p;
  }

  std::vector<std::vector<double>> next(std::size_t n) {
    std::vector<std::vector<double>> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pts.push_back(next());
    return pts;
  }

 private:
  std::size_t dim_;
  std::vector<std::array<std::uint32_t, kBits>> v_;
  std::vector<std::uint32_t> x_;
  std::vector<std::uint32_t> shift_;
  std::uint64_t index_ = 0;
};

inline Genome scale_to_bounds(std::span<const double> unit, const DomainBounds& b) {
  if (unit.size() != kGenes) throw DimensionError("scale_to_bounds: expected 16 coordinates");
  Genome g;
  for (std::size_t k = 0; k < kGenes; ++k) g.genes[k] = b.lower(k) + unit[k] * b.range(k);
  return g;
}

inline std::vector<double> unscale_from_bounds(const Genome& g, const DomainBounds& b) {
  std::vector<double> u(kGenes);
  for (std::size_t k = 0; k < kGenes; ++k) u[k] = (g.genes[k] - b.lower(k)) / b.range(k);
  return u;
}

/// First n points of the unscrambled 16-D sequence mapped into the bounds.
inline std::vector<Genome> sobol_genomes(std::size_t n, const DomainBounds& b,
                                         std::optional<std::uint64_t> scramble_seed = std::nullopt) {
  SobolGenerator gen(kGenes, scramble_seed);
  std::vector<Genome> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(scale_to_bounds(gen.next(), b));
  return out;
}

}  // namespace polyqd

#endif  // POLYQD_SAMPLING_HPP
