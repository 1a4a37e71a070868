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
 * \file polyqd/experiments.hpp
 *
 * \brief Study orchestration: neutrality cases, Pareto ground truth, and a
 *  resumable runner over (case x bins x algorithm x seed) cells.
 *
 * A study directory holds `results.csv` (one row per completed cell),
 * `manifest.txt` (completed and failed cells) and `cells/<key>.csv` (the
 * final solution set of each cell in archive CSV format). Rows are appended
 * as cells finish and rewritten in canonical cell order when the study ends,
 * so identical configurations produce identical files.
 */

#ifndef POLYQD_EXPERIMENTS_HPP
#define POLYQD_EXPERIMENTS_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "polyqd/archive.hpp"
#include "polyqd/autove.hpp"
#include "polyqd/evaluation.hpp"
#include "polyqd/geometry.hpp"
#include "polyqd/metrics.hpp"
#include "polyqd/nsga2.hpp"
#include "polyqd/rls.hpp"
#include "polyqd/ve.hpp"

namespace polyqd {

// ---------------------------------------------------------------------------
// Neutrality cases.

inline constexpr std::array<char, 5> kCaseNames{'A', 'B', 'C', 'D', 'E'};

/// Cases A..E, each admitting a strictly larger box than the previous one.
inline std::array<DomainBounds, 5> neutrality_cases() {
  return {DomainBounds(0.0, 1.0, -0.05, 0.05), DomainBounds(0.0, 1.0, -0.125, 0.125),
          DomainBounds(-0.25, 1.0, -0.25, 0.25), DomainBounds(-0.5, 1.0, -0.5, 0.5),
          DomainBounds(-1.0, 1.0, -1.0, 1.0)};
}

inline DomainBounds neutrality_case(char name) {
  const auto it = std::find(kCaseNames.begin(), kCaseNames.end(), name);
  if (it == kCaseNames.end()) throw std::invalid_argument(std::string("unknown bounds case '") + name + "'");
  return neutrality_cases()[static_cast<std::size_t>(it - kCaseNames.begin())];
}

// ---------------------------------------------------------------------------
// Pareto ground truth.

struct GroundTruth {
  std::vector<Genome> genomes;
  std::vector<Bitmap> bitmaps;
};

inline constexpr std::size_t kParetoGridSide = 10;

/// 10 x 10 grid of genomes with all radii equal to r and all angular
/// deviations equal to theta, both taken at 10 equidistant values spanning
/// the bounds, endpoints included. Row-major in r.
inline GroundTruth pareto_ground_truth(const DomainBounds& b) {
  GroundTruth t;
  const auto step = [](double lo, double hi, std::size_t i) {
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kParetoGridSide - 1);
  };
  for (std::size_t i = 0; i < kParetoGridSide; ++i) {
    const double r = step(b.radial_min, b.radial_max, i);
    for (std::size_t j = 0; j < kParetoGridSide; ++j) {
      const double theta = step(b.angular_min, b.angular_max, j);
      Genome g;
      for (std::size_t k = 0; k < kControlPoints; ++k) {
        g.genes[k] = r;
        g.genes[kControlPoints + k] = theta;
      }
      t.bitmaps.push_back(rasterize(express(g, b)));
      t.genomes.push_back(g);
    }
  }
  return t;
}

/// Per solution, the smallest count of differing pixels to any truth bitmap.
inline std::vector<double> pareto_distance(std::span<const Bitmap> solutions, std::span<const Bitmap> truth) {
  if (truth.empty()) throw std::invalid_argument("pareto_distance: empty truth set");
  std::vector<double> out;
  out.reserve(solutions.size());
  for (const auto& s : solutions) {
    std::size_t best = kPixels;
    for (const auto& t : truth) best = std::min(best, pixel_error(s, t));
    out.push_back(static_cast<double>(best));
  }
  return out;
}

/// Median, averaging the two middle values of an even-sized sample.
inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty sample");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Configuration.

enum class Study { bin_sweep, neutrality_sweep, pareto_distance, autove_compare };

inline std::string to_string(Study s) {
  switch (s) {
    case Study::bin_sweep: return "bin_sweep";
    case Study::neutrality_sweep: return "neutrality_sweep";
    case Study::pareto_distance: return "pareto_distance";
    case Study::autove_compare: return "autove_compare";
  }
  return "?";
}

/// Accepts the canonical names and the short forms bins, neutrality, pareto
/// and autove.
inline Study study_from_string(const std::string& s) {
  if (s == "bin_sweep" || s == "bins") return Study::bin_sweep;
  if (s == "neutrality_sweep" || s == "neutrality") return Study::neutrality_sweep;
  if (s == "pareto_distance" || s == "pareto") return Study::pareto_distance;
  if (s == "autove_compare" || s == "autove") return Study::autove_compare;
  throw std::invalid_argument("unknown study '" + s + "'");
}

inline const std::vector<std::string>& known_algorithms() {
  static const std::vector<std::string> names{"ve_genetic", "ve_feature", "rls", "nsga2"};
  return names;
}

/// Algorithm tags are ve_genetic, ve_feature, rls, nsga2 and autove_<L> for
/// a latent dimension L.
inline bool is_known_algorithm(const std::string& a) {
  if (std::find(known_algorithms().begin(), known_algorithms().end(), a) != known_algorithms().end()) return true;
  if (a.rfind("autove_", 0) != 0 || a.size() == 7) return false;
  return std::all_of(a.begin() + 7, a.end(), [](char c) { return c >= '0' && c <= '9'; }) && std::stoi(a.substr(7)) >= 1;
}

struct ExperimentConfig {
  Study study = Study::neutrality_sweep;
  std::vector<char> cases;                ///< empty: study default
  std::vector<std::string> algorithms;    ///< empty: study default
  std::vector<std::size_t> bins;          ///< bin sweep grid; empty: {25, 50, 100, 200, 400}
  std::size_t solutions = 400;            ///< archive size, population and restart count
  std::size_t generations = 1024;
  std::size_t replicates = 5;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  double ve_mutation_sigma = 0.10;
  double rls_step_size = 0.065;
  double nsga2_crossover_prob = 0.9;
  double nsga2_mutation_prob = 1.0 / 16.0;
  double nsga2_sbx_eta = 20.0;
  TrainConfig train;
  MetricConfig metrics;

  bool record_timing = false;  ///< wall_ms stays 0 otherwise, keeping rows reproducible

  /// 1024 generations, 400 solutions.
  static ExperimentConfig full(Study s) {
    ExperimentConfig c;
    c.study = s;
    return c;
  }

  /// 256 generations, 100 solutions.
  static ExperimentConfig desk(Study s) {
    ExperimentConfig c = full(s);
    c.generations = 256;
    c.solutions = 100;
    return c;
  }

  [[nodiscard]] std::vector<char> effective_cases() const {
    if (!cases.empty()) return cases;
    switch (study) {
      case Study::neutrality_sweep: return {kCaseNames.begin(), kCaseNames.end()};
      case Study::pareto_distance: return {'B', 'E'};
      default: return {'B'};
    }
  }

  [[nodiscard]] std::vector<std::string> effective_algorithms() const {
    if (!algorithms.empty()) return algorithms;
    switch (study) {
      case Study::bin_sweep: return {"ve_genetic", "ve_feature"};
      case Study::neutrality_sweep: return {"ve_feature", "rls", "nsga2"};
      case Study::pareto_distance: return {"ve_feature", "rls"};
      case Study::autove_compare: return {"ve_feature", "autove_2", "autove_10"};
    }
    return {};
  }

  [[nodiscard]] std::vector<std::size_t> effective_bins() const {
    if (study != Study::bin_sweep) return {solutions};
    if (!bins.empty()) return bins;
    return {25, 50, 100, 200, 400};
  }

  /// Evaluations per cell at `n` solutions.
  [[nodiscard]] std::size_t eval_budget(std::size_t n) const { return n * (generations + 1); }
  [[nodiscard]] std::size_t eval_budget() const { return eval_budget(solutions); }

  void validate() const {
    if (seeds.empty()) throw std::invalid_argument("ExperimentConfig: seeds must be nonempty");
    if (replicates != seeds.size())
      throw std::invalid_argument("ExperimentConfig: replicates (" + std::to_string(replicates) +
                                  ") must equal the number of seeds (" + std::to_string(seeds.size()) + ")");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
      throw std::invalid_argument("ExperimentConfig: duplicate seed");
    if (generations == 0) throw std::invalid_argument("ExperimentConfig: generations must be >= 1");
    for (auto n : effective_bins())
      if (n < 2) throw std::invalid_argument("ExperimentConfig: solutions and bins must be >= 2");
    for (char c : effective_cases()) (void)neutrality_case(c);
    for (const auto& a : effective_algorithms())
      if (!is_known_algorithm(a)) throw std::invalid_argument("ExperimentConfig: unknown algorithm '" + a + "'");
    if (!(ve_mutation_sigma > 0.0 && ve_mutation_sigma <= 1.0))
      throw std::invalid_argument("ExperimentConfig: ve mutation sigma must be in (0, 1]");
    if (!(rls_step_size > 0.0)) throw std::invalid_argument("ExperimentConfig: rls step size must be positive");
    train.validate();
  }
};

// ---------------------------------------------------------------------------
// Cells and results.

struct Cell {
  Study study = Study::neutrality_sweep;
  char bounds_case = 'B';
  std::string algorithm;
  std::size_t bins = 0;
  std::uint64_t seed = 1;

  [[nodiscard]] std::string key() const {
    return to_string(study) + "_" + bounds_case + "_" + algorithm + "_b" + std::to_string(bins) + "_s" +
           std::to_string(seed);
  }
};

/// Cells in canonical order: case, bins, algorithm, seed.
inline std::vector<Cell> enumerate_cells(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  for (char c : cfg.effective_cases())
    for (auto n : cfg.effective_bins())
      for (const auto& a : cfg.effective_algorithms())
        for (auto s : cfg.seeds) cells.push_back({cfg.study, c, a, n, s});
  return cells;
}

/// Final solution set of one cell.
struct Solution {
  Genome genome;
  Bitmap bitmap;
  Features features;
  double fitness = 0.0;
  std::vector<double> descriptor;
};

struct CellRun {
  std::vector<Solution> solutions;
  std::size_t evaluations = 0;
};

struct RunResult {
  std::string study;
  char bounds_case = 'B';
  std::string algorithm;
  std::size_t bins = 0;
  std::uint64_t seed = 0;
  DiversityValues genetic;
  DiversityValues phenotypic;
  double fitness_median = 0.0;
  double pareto_px_min_median = 0.0;
  double wall_ms = 0.0;
  std::vector<double> pareto_px;  ///< per solution; stored in the cell artifact
  std::size_t evaluations = 0;

  [[nodiscard]] std::string key() const {
    return study + "_" + bounds_case + "_" + algorithm + "_b" + std::to_string(bins) + "_s" + std::to_string(seed);
  }
};

inline Solution to_solution(const Evaluation& e, std::vector<double> descriptor = {}) {
  return {e.genome, e.bitmap, e.features, e.fitness, std::move(descriptor)};
}

inline Solution to_solution(const Elite& e) { return {e.genome, e.bitmap, e.features, e.fitness, e.descriptor}; }

/// Runs one algorithm at `cell.bins` solutions. Every algorithm spends
/// bins * (generations + 1) evaluations, RLS up to early convergence of its
/// local searches.
inline CellRun run_cell(const ExperimentConfig& cfg, const Cell& cell) {
  const DomainBounds bounds = neutrality_case(cell.bounds_case);
  CellRun out;
  const auto& a = cell.algorithm;
  if (a == "ve_genetic" || a == "ve_feature") {
    VEConfig vc;
    vc.archive_capacity = cell.bins;
    vc.generations = cfg.generations;
    vc.mutation_sigma_fraction = cfg.ve_mutation_sigma;
    vc.descriptor_mode = a == "ve_genetic" ? DescriptorMode::genetic : DescriptorMode::feature;
    vc.bounds = bounds;
    vc.seed = cell.seed;
    VoronoiElites ve(vc);
    ve.initialize();
    ve.run(vc.generations);
    for (const auto& e : ve.archive().elites()) out.solutions.push_back(to_solution(e));
    out.evaluations = ve.evaluations();
  } else if (a == "rls") {
    RLSConfig rc;
    rc.restarts = cell.bins;
    rc.step_size = cfg.rls_step_size;
    rc.max_evals_per_restart = cfg.generations + 1;
    rc.bounds = bounds;
    rc.seed = cell.seed;
    for (const auto& r : rls_run(rc)) {
      out.solutions.push_back(to_solution(r.eval));
      out.evaluations += r.evaluations;
    }
  } else if (a == "nsga2") {
    NSGA2Config nc;
    nc.population = cell.bins;
    nc.generations = cfg.generations;
    nc.crossover_prob = cfg.nsga2_crossover_prob;
    nc.mutation_prob_per_gene = cfg.nsga2_mutation_prob;
    nc.mutation_sigma_fraction = cfg.ve_mutation_sigma;
    nc.sbx_eta = cfg.nsga2_sbx_eta;
    nc.bounds = bounds;
    nc.seed = cell.seed;
    for (const auto& ind : nsga2_run(nc)) out.solutions.push_back(to_solution(ind.eval));
    out.evaluations = nc.evaluation_budget();
  } else if (is_known_algorithm(a) && a.rfind("autove_", 0) == 0) {
    AutoVEConfig ac;
    ac.ve.archive_capacity = cell.bins;
    ac.ve.generations = cfg.generations;
    ac.ve.mutation_sigma_fraction = cfg.ve_mutation_sigma;
    ac.ve.bounds = bounds;
    ac.ve.seed = cell.seed;
    ac.train = cfg.train;
    ac.train.seed = cell.seed;
    ac.latent_dim = std::stoi(a.substr(7));
    const auto r = autove_run(ac);
    for (const auto& e : r.archive.elites()) out.solutions.push_back(to_solution(e));
    out.evaluations = r.evaluations;
  } else {
    throw std::invalid_argument("run_cell: unknown algorithm '" + a + "'");
  }
  return out;
}

/// Diversity, fitness and Pareto statistics of one final solution set.
inline RunResult summarize(const ExperimentConfig& cfg, const Cell& cell, const CellRun& run) {
  if (run.solutions.empty()) throw std::runtime_error("summarize: empty solution set");
  std::vector<Genome> genomes;
  std::vector<Bitmap> bitmaps;
  std::vector<double> fitness;
  for (const auto& s : run.solutions) {
    genomes.push_back(s.genome);
    bitmaps.push_back(s.bitmap);
    fitness.push_back(s.fitness);
  }
  RunResult r;
  r.study = to_string(cell.study);
  r.bounds_case = cell.bounds_case;
  r.algorithm = cell.algorithm;
  r.bins = cell.bins;
  r.seed = cell.seed;
  r.genetic = genetic_diversity(genomes, cfg.metrics);
  r.phenotypic = phenotypic_diversity(bitmaps, cfg.metrics);
  r.fitness_median = median(fitness);
  const auto truth = pareto_ground_truth(neutrality_case(cell.bounds_case));
  r.pareto_px = pareto_distance(bitmaps, truth.bitmaps);
  r.pareto_px_min_median = median(r.pareto_px);
  r.evaluations = run.evaluations;
  const std::array<double, 8> fields{r.genetic.sdnn,    r.genetic.spd,    r.genetic.pd, r.phenotypic.sdnn,
                                     r.phenotypic.spd, r.phenotypic.pd, r.fitness_median, r.pareto_px_min_median};
  for (double v : fields)
    if (!std::isfinite(v)) throw std::runtime_error("summarize: non-finite metric in cell " + cell.key());
  return r;
}

// ---------------------------------------------------------------------------
// CSV.

inline constexpr const char* kResultsHeader =
    "study,case,algorithm,bins,seed,sdnn_gen,spd_gen,pd_gen,sdnn_phen,spd_phen,pd_phen,fitness_median,"
    "pareto_px_min_median,wall_ms";

inline std::string format_row(const RunResult& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.study << ',' << r.bounds_case << ',' << r.algorithm << ',' << r.bins << ',' << r.seed << ','
     << r.genetic.sdnn << ',' << r.genetic.spd << ',' << r.genetic.pd << ',' << r.phenotypic.sdnn << ','
     << r.phenotypic.spd << ',' << r.phenotypic.pd << ',' << r.fitness_median << ',' << r.pareto_px_min_median
     << ',' << r.wall_ms;
  return os.str();
}

inline RunResult parse_row(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) f.push_back(tok);
  if (f.size() != 14 || f[1].size() != 1) throw std::runtime_error("results csv: malformed row '" + line + "'");
  RunResult r;
  r.study = f[0];
  r.bounds_case = f[1][0];
  r.algorithm = f[2];
  r.bins = std::stoul(f[3]);
  r.seed = std::stoull(f[4]);
  r.genetic = {std::stod(f[5]), std::stod(f[6]), std::stod(f[7])};
  r.phenotypic = {std::stod(f[8]), std::stod(f[9]), std::stod(f[10])};
  r.fitness_median = std::stod(f[11]);
  r.pareto_px_min_median = std::stod(f[12]);
  r.wall_ms = std::stod(f[13]);
  return r;
}

inline std::vector<RunResult> read_results_csv(std::istream& is) {
  std::vector<RunResult> rows;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != kResultsHeader) throw std::runtime_error("results csv: unexpected header");
      header = true;
      continue;
    }
    rows.push_back(parse_row(line));
  }
  return rows;
}

inline std::vector<RunResult> read_results_csv(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return read_results_csv(in);
}

/// Archive CSV of the cell's solutions with per-solution area,
/// circumference and Pareto pixel error, preceded by a config echo.
inline void write_cell_artifact(std::ostream& os, const ExperimentConfig& cfg, const Cell& cell, const CellRun& run,
                                const RunResult& r) {
  os << "# cell " << cell.key() << '\n'
     << "# study=" << to_string(cell.study) << " case=" << cell.bounds_case << " algorithm=" << cell.algorithm
     << " bins=" << cell.bins << " seed=" << cell.seed << " generations=" << cfg.generations
     << " evaluations=" << run.evaluations << '\n';
  std::vector<Elite> elites;
  std::vector<double> area, circ;
  for (const auto& s : run.solutions) {
    Elite e;
    e.genome = s.genome;
    e.descriptor = s.descriptor;
    e.fitness = s.fitness;
    elites.push_back(std::move(e));
    area.push_back(s.features.area);
    circ.push_back(s.features.circumference);
  }
  write_archive_csv(os, elites, neutrality_case(cell.bounds_case),
                    {{"area", area}, {"circumference", circ}, {"pareto_px", r.pareto_px}});
}

// ---------------------------------------------------------------------------
// Study runner.

struct CellFailure {
  std::string key;
  std::string message;
};

struct StudyReport {
  std::vector<RunResult> rows;  ///< every completed cell, canonical order
  std::vector<CellFailure> failures;
  std::size_t executed = 0;  ///< cells run by this call
  std::size_t skipped = 0;   ///< cells already listed in the manifest
};

struct StudyOptions {
  std::size_t threads = 0;  ///< 0: hardware concurrency, capped by POLYQD_THREADS
  std::function<void(const std::string& key, std::size_t done, std::size_t total)> progress;
  /// Test hook: replaces run_cell.
  std::function<CellRun(const ExperimentConfig&, const Cell&)> runner;
};

inline std::size_t resolve_threads(std::size_t requested) {
  std::size_t n = requested != 0 ? requested : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("POLYQD_THREADS")) {
    char* end = nullptr;
    const unsigned long cap = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && cap >= 1) n = std::min<std::size_t>(n, cap);
  }
  return n;
}

namespace detail {

inline std::set<std::string> read_manifest(const std::filesystem::path& p) {
  std::set<std::string> done;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag, key;
    if (ls >> tag >> key && tag == "done") done.insert(key);
  }
  return done;
}

inline void write_atomically(const std::filesystem::path& p, const std::string& content) {
  const auto tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, p);
}

}  // namespace detail

/// Runs every cell not yet listed as done in `dir/manifest.txt`. A cell's
/// artifact, row and manifest entry are written in that order, so a listed
/// cell always has its row. Failed cells are recorded and the rest proceed.
inline StudyReport run_study(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                             const StudyOptions& opt = {}) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(dir / "cells");
  const auto results_path = dir / "results.csv";
  const auto manifest_path = dir / "manifest.txt";

  const auto cells = enumerate_cells(cfg);
  std::map<std::string, std::size_t> order;
  for (std::size_t i = 0; i < cells.size(); ++i) order[cells[i].key()] = i;

  const auto done = detail::read_manifest(manifest_path);
  std::map<std::size_t, RunResult> kept;
  if (fs::exists(results_path)) {
    for (auto& r : read_results_csv(results_path)) {
      const auto it = order.find(r.key());
      if (it != order.end() && done.count(r.key()) != 0) kept.emplace(it->second, std::move(r));
    }
  }

  StudyReport report;
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (kept.count(i) != 0)
      ++report.skipped;
    else
      todo.push_back(i);
  }

  // Rewrite the store so it holds exactly the kept rows before appending.
  {
    std::string content = std::string(kResultsHeader) + "\n";
    for (const auto& [i, r] : kept) content += format_row(r) + "\n";
    detail::write_atomically(results_path, content);
  }
  std::ofstream results(results_path, std::ios::app | std::ios::binary);
  std::ofstream manifest(manifest_path, std::ios::app | std::ios::binary);
  if (!results || !manifest) throw std::runtime_error("cannot open study store in " + dir.string());

  std::mutex writer;
  std::atomic<std::size_t> next{0};
  std::size_t finished = 0;
  const auto runner = opt.runner ? opt.runner : run_cell;

  auto work = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= todo.size()) return;
      const Cell& cell = cells[todo[t]];
      try {
        const auto start = std::chrono::steady_clock::now();
        const CellRun run = runner(cfg, cell);
        RunResult r = summarize(cfg, cell, run);
        if (cfg.record_timing)
          r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        std::ostringstream art;
        write_cell_artifact(art, cfg, cell, run, r);
        detail::write_atomically(dir / "cells" / (cell.key() + ".csv"), art.str());
        std::lock_guard<std::mutex> lock(writer);
        results << format_row(r) << '\n' << std::flush;
        manifest << "done " << cell.key() << " evaluations=" << run.evaluations << '\n' << std::flush;
        kept.emplace(todo[t], std::move(r));
        ++report.executed;
        if (opt.progress) opt.progress(cell.key(), ++finished, todo.size());
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(writer);
        manifest << "failed " << cell.key() << ' ' << e.what() << '\n' << std::flush;
        report.failures.push_back({cell.key(), e.what()});
        if (opt.progress) opt.progress(cell.key(), ++finished, todo.size());
      }
    }
  };

  const std::size_t nthreads = std::min(resolve_threads(opt.threads), std::max<std::size_t>(1, todo.size()));
  if (nthreads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < nthreads; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  results.close();
  manifest.close();

  std::string content = std::string(kResultsHeader) + "\n";
  for (const auto& [i, r] : kept) content += format_row(r) + "\n";
  detail::write_atomically(results_path, content);

  for (auto& [i, r] : kept) report.rows.push_back(std::move(r));
  std::sort(report.failures.begin(), report.failures.end(),
            [&](const CellFailure& a, const CellFailure& b) { return order[a.key] < order[b.key]; });
  return report;
}

}  // namespace polyqd

#endif  // POLYQD_EXPERIMENTS_HPP
