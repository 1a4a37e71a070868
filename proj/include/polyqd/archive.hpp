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
 * \file polyqd/archive.hpp
 *
 * \brief Voronoi-Elites archive.
 *
 * Offspring are always accepted. While the archive holds more than
 * `capacity` elites, the closest pair in descriptor space is found and its
 * lower-fitness member removed. There are no fixed cells: the surviving
 * elites are the Voronoi generators.
 */

#ifndef POLYQD_ARCHIVE_HPP
#define POLYQD_ARCHIVE_HPP

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "polyqd/geometry.hpp"

namespace polyqd {

struct Elite {
  Genome genome;
  std::vector<double> descriptor;
  double fitness = 0.0;
  Bitmap bitmap;
  Features features;
  std::uint64_t birth_order = 0;  ///< assigned by the archive on insert
};

class VEArchive {
 public:
  VEArchive(std::size_t capacity, std::size_t descriptor_dim)
      : capacity_(capacity), dim_(descriptor_dim) {
    if (capacity == 0) throw std::invalid_argument("VEArchive: capacity must be positive");
    if (descriptor_dim == 0) throw std::invalid_argument("VEArchive: descriptor_dim must be positive");
  }

  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  [[nodiscard]] std::size_t descriptor_dim() const { return dim_; }
  [[nodiscard]] std::size_t size() const { return elites_.size(); }
  [[nodiscard]] bool empty() const { return elites_.empty(); }
  [[nodiscard]] const std::vector<Elite>& elites() const { return elites_; }
  [[nodiscard]] const Elite& operator[](std::size_t i) const { return elites_[i]; }
  [[nodiscard]] std::uint64_t next_birth_order() const { return next_birth_; }

  /// Appends every elite unconditionally; capacity may be exceeded until
  /// prune_to_capacity().
  void insert(std::vector<Elite> batch) {
    for (const auto& e : batch)
      if (e.descriptor.size() != dim_)
        throw DimensionError("VEArchive::insert: descriptor has dimension " +
                             std::to_string(e.descriptor.size()) + ", archive expects " +
                             std::to_string(dim_));
    for (auto& e : batch) {
      e.birth_order = next_birth_++;
      elites_.push_back(std::move(e));
      nn_.push_back({kNone, kInf});
      const std::size_t k = elites_.size() - 1;
      for (std::size_t i = 0; i < k; ++i) {
        const double d2 = dist2(i, k);
        offer(i, k, d2);
        offer(k, i, d2);
      }
    }
  }

  /// Indices (i, j) of the pair with the smallest Euclidean descriptor
  /// distance; ties go to the lexicographically smallest (birth_i, birth_j),
  /// with birth_i < birth_j.
  [[nodiscard]] std::pair<std::size_t, std::size_t> closest_pair() const {
    if (elites_.size() < 2) throw std::logic_error("VEArchive::closest_pair: fewer than two elites");
    std::size_t bi = kNone;
    for (std::size_t i = 0; i < elites_.size(); ++i) {
      if (bi == kNone || pair_less(i, nn_[i].index, bi, nn_[bi].index, nn_[i].dist2, nn_[bi].dist2))
        bi = i;
    }
    std::size_t a = bi;
    std::size_t b = nn_[bi].index;
    if (elites_[a].birth_order > elites_[b].birth_order) std::swap(a, b);
    return {a, b};
  }

  /// Removes elites until size() <= capacity(). `on_remove(removed, kept,
  /// distance)` is called with copies of both pair members before each
  /// removal.
  template <typename OnRemove>
  void prune_to_capacity(OnRemove&& on_remove) {
    while (elites_.size() > capacity_) {
      const auto [i, j] = closest_pair();
      const std::size_t loser = lower_fitness(i, j);
      const std::size_t keeper = loser == i ? j : i;
      on_remove(elites_[loser], elites_[keeper], std::sqrt(dist2(i, j)));
      erase(loser);
    }
  }

  void prune_to_capacity() {
    prune_to_capacity([](const Elite&, const Elite&, double) {});
  }

  /// k uniform draws with replacement.
  template <typename Rng>
  [[nodiscard]] std::vector<Elite> select_random(std::size_t k, Rng& rng) const {
    if (elites_.empty()) throw std::logic_error("VEArchive::select_random: empty archive");
    std::uniform_int_distribution<std::size_t> pick(0, elites_.size() - 1);
    std::vector<Elite> out;
    out.reserve(k);
    for (std::size_t n = 0; n < k; ++n) out.push_back(elites_[pick(rng)]);
    return out;
  }

  /// Replaces every descriptor (e.g. after retraining a feature model) and
  /// rebuilds the neighbor cache. Does not prune.
  template <typename DescriptorFn>
  void redescribe(std::size_t new_dim, DescriptorFn&& fn) {
    if (new_dim == 0) throw std::invalid_argument("VEArchive::redescribe: zero dimension");
    for (auto& e : elites_) {
      e.descriptor = fn(e);
      if (e.descriptor.size() != new_dim) throw DimensionError("VEArchive::redescribe: dimension mismatch");
    }
    dim_ = new_dim;
    rebuild_neighbors();
  }

  void set_capacity(std::size_t c) {
    if (c == 0) throw std::invalid_argument("VEArchive: capacity must be positive");
    capacity_ = c;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  struct Neighbor {
    std::size_t index;
    double dist2;
  };

  [[nodiscard]] double dist2(std::size_t i, std::size_t j) const {
    const auto& a = elites_[i].descriptor;
    const auto& b = elites_[j].descriptor;
    double s = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) {
      const double d = a[k] - b[k];
      s += d * d;
    }
    return s;
  }

  // Pair (i, j) ordered by (distance, min birth, max birth).
  [[nodiscard]] bool pair_less(std::size_t i, std::size_t j, std::size_t k, std::size_t l, double dij,
                               double dkl) const {
    if (dij != dkl) return dij < dkl;
    auto key = [this](std::size_t a, std::size_t b) {
      const auto ba = elites_[a].birth_order;
      const auto bb = elites_[b].birth_order;
      return ba < bb ? std::pair{ba, bb} : std::pair{bb, ba};
    };
    return key(i, j) < key(k, l);
  }

  void offer(std::size_t i, std::size_t cand, double d2) {
    auto& nn = nn_[i];
    if (nn.index == kNone || d2 < nn.dist2 ||
        (d2 == nn.dist2 && elites_[cand].birth_order < elites_[nn.index].birth_order)) {
      nn = {cand, d2};
    }
  }

  void recompute(std::size_t i) {
    nn_[i] = {kNone, kInf};
    for (std::size_t j = 0; j < elites_.size(); ++j)
      if (j != i) offer(i, j, dist2(i, j));
  }

  void rebuild_neighbors() {
    nn_.assign(elites_.size(), {kNone, kInf});
    for (std::size_t i = 0; i < elites_.size(); ++i) recompute(i);
  }

  // Lower fitness loses; on a fitness tie the younger (higher birth order) loses.
  [[nodiscard]] std::size_t lower_fitness(std::size_t i, std::size_t j) const {
    const auto& a = elites_[i];
    const auto& b = elites_[j];
    if (a.fitness != b.fitness) return a.fitness < b.fitness ? i : j;
    return a.birth_order > b.birth_order ? i : j;
  }

  void erase(std::size_t r) {
    elites_.erase(elites_.begin() + static_cast<std::ptrdiff_t>(r));
    nn_.erase(nn_.begin() + static_cast<std::ptrdiff_t>(r));
    std::vector<std::size_t> stale;
    for (std::size_t i = 0; i < nn_.size(); ++i) {
      if (nn_[i].index == r) {
        stale.push_back(i);
      } else if (nn_[i].index > r && nn_[i].index != kNone) {
        --nn_[i].index;
      }
    }
    for (auto i : stale) recompute(i);
  }

  std::size_t capacity_;
  std::size_t dim_;
  std::vector<Elite> elites_;
  std::vector<Neighbor> nn_;
  std::uint64_t next_birth_ = 0;
};

// ---------------------------------------------------------------------------
// CSV: one elite per line, genes g0..g15, descriptor d0..d{k-1}, fitness,
// then any extra named columns. A leading comment carries the domain bounds
// so the file can be re-expressed; other '#' lines are free-form comments.

struct ExtraColumn {
  std::string name;
  std::vector<double> values;  ///< one per elite
};

inline void write_archive_csv(std::ostream& os, const std::vector<Elite>& elites,
                              const DomainBounds& bounds, const std::vector<ExtraColumn>& extra = {}) {
  const std::size_t dim = elites.empty() ? 0 : elites.front().descriptor.size();
  for (const auto& c : extra)
    if (c.values.size() != elites.size()) throw DimensionError("write_archive_csv: extra column length mismatch");
  std::ostringstream buf;
  buf.precision(17);
  buf << "# bounds," << bounds.radial_min << ',' << bounds.radial_max << ',' << bounds.angular_min
      << ',' << bounds.angular_max << '\n';
  for (std::size_t k = 0; k < kGenes; ++k) buf << 'g' << k << ',';
  for (std::size_t k = 0; k < dim; ++k) buf << 'd' << k << ',';
  buf << "fitness";
  for (const auto& c : extra) buf << ',' << c.name;
  buf << '\n';
  for (std::size_t i = 0; i < elites.size(); ++i) {
    const auto& e = elites[i];
    for (double v : e.genome.genes) buf << v << ',';
    for (double v : e.descriptor) buf << v << ',';
    buf << e.fitness;
    for (const auto& c : extra) buf << ',' << c.values[i];
    buf << '\n';
  }
  os << buf.str();
}

struct ArchiveFile {
  DomainBounds bounds;
  std::vector<Elite> elites;  ///< bitmaps and features re-expressed on load
  std::vector<ExtraColumn> extra;
};

/// Columns are matched by header name; g0..g15 and fitness are required.
inline ArchiveFile read_archive_csv(std::istream& is) {
  ArchiveFile out;
  std::string line;
  bool header = false;
  std::array<std::size_t, kGenes> gene_col{};
  std::vector<std::size_t> desc_col;
  std::size_t fitness_col = 0;
  std::vector<std::size_t> extra_col;
  std::size_t ncols = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> f;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    return f;
  };
  auto number = [](const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::runtime_error("archive csv: bad number '" + s + "'");
    return v;
  };
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# bounds,", 0) == 0) {
      auto f = split(line.substr(9));
      if (f.size() != 4) throw std::runtime_error("archive csv: malformed bounds line");
      out.bounds = DomainBounds(number(f[0]), number(f[1]), number(f[2]), number(f[3]));
      continue;
    }
    if (line[0] == '#') continue;
    auto f = split(line);
    if (!header) {
      ncols = f.size();
      std::vector<bool> seen_gene(kGenes, false);
      bool seen_fitness = false;
      for (std::size_t c = 0; c < f.size(); ++c) {
        const auto& name = f[c];
        if (name.size() > 1 && name[0] == 'g' && std::isdigit(static_cast<unsigned char>(name[1]))) {
          const auto k = std::stoul(name.substr(1));
          if (k >= kGenes) throw std::runtime_error("archive csv: unknown gene column " + name);
          gene_col[k] = c;
          seen_gene[k] = true;
        } else if (name.size() > 1 && name[0] == 'd' && std::isdigit(static_cast<unsigned char>(name[1]))) {
          desc_col.push_back(c);
        } else if (name == "fitness") {
          fitness_col = c;
          seen_fitness = true;
        } else {
          extra_col.push_back(c);
          out.extra.push_back({name, {}});
        }
      }
      if (!seen_fitness || std::find(seen_gene.begin(), seen_gene.end(), false) != seen_gene.end())
        throw std::runtime_error("archive csv: missing header");
      header = true;
      continue;
    }
    if (f.size() != ncols) throw std::runtime_error("archive csv: bad column count");
    Elite e;
    for (std::size_t k = 0; k < kGenes; ++k) e.genome.genes[k] = number(f[gene_col[k]]);
    for (auto c : desc_col) e.descriptor.push_back(number(f[c]));
    e.fitness = number(f[fitness_col]);
    for (std::size_t x = 0; x < extra_col.size(); ++x) out.extra[x].values.push_back(number(f[extra_col[x]]));
    const auto poly = express_unchecked(e.genome);
    e.bitmap = rasterize(poly);
    e.features = features(poly, e.bitmap);
    e.birth_order = out.elites.size();
    out.elites.push_back(std::move(e));
  }
  if (!header) throw std::runtime_error("archive csv: empty file");
  return out;
}

}  // namespace polyqd

#endif  // POLYQD_ARCHIVE_HPP
