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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "polyqd/experiments.hpp"

using namespace polyqd;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("polyqd_exp_" + name);
  fs::remove_all(d);
  return d;
}

Bitmap random_bitmap(std::mt19937_64& rng) {
  Bitmap b;
  for (std::size_t j = 0; j < kRaster; ++j) b.set_row(j, rng());
  return b;
}

// Cheap deterministic stand-in for the optimizers.
CellRun fake_run(const ExperimentConfig&, const Cell& cell) {
  const auto b = neutrality_case(cell.bounds_case);
  std::mt19937_64 rng(cell.seed * 1000 + cell.bins + cell.algorithm.size());
  CellRun run;
  for (const auto& g : sobol_genomes(cell.bins, b)) {
    const auto e = evaluate(gaussian_mutate(g, 0.2, b, rng), b);
    run.solutions.push_back(to_solution(e));
  }
  run.evaluations = cell.bins;
  return run;
}

ExperimentConfig tiny(Study s) {
  auto cfg = ExperimentConfig::desk(s);
  cfg.solutions = 6;
  cfg.generations = 3;
  cfg.seeds = {1, 2};
  cfg.replicates = 2;
  cfg.bins = {4, 6};
  return cfg;
}

TEST(NeutralityCases, ExactValues) {
  const auto c = neutrality_cases();
  EXPECT_EQ(c[0], DomainBounds(0.0, 1.0, -0.05, 0.05));
  EXPECT_EQ(c[1], DomainBounds(0.0, 1.0, -0.125, 0.125));
  EXPECT_EQ(c[2], DomainBounds(-0.25, 1.0, -0.25, 0.25));
  EXPECT_EQ(c[3], DomainBounds(-0.5, 1.0, -0.5, 0.5));
  EXPECT_EQ(c[4], DomainBounds(-1.0, 1.0, -1.0, 1.0));
  EXPECT_EQ(neutrality_case('B').angular_max, 0.125);
  EXPECT_EQ(neutrality_case('E').radial_min, -1.0);
  EXPECT_THROW(neutrality_case('F'), std::invalid_argument);
}

TEST(NeutralityCases, HypervolumeStrictlyIncreases) {
  const auto c = neutrality_cases();
  for (std::size_t i = 1; i < c.size(); ++i) {
    auto vol = [](const DomainBounds& b) {
      return std::pow(b.radial_max - b.radial_min, 8) * std::pow(b.angular_max - b.angular_min, 8);
    };
    EXPECT_GT(vol(c[i]), vol(c[i - 1]));
    EXPECT_LE(c[i].radial_min, c[i - 1].radial_min);
    EXPECT_LE(c[i].angular_min, c[i - 1].angular_min);
  }
}

TEST(ParetoGroundTruth, GridOfSymmetricShapes) {
  for (const auto& b : neutrality_cases()) {
    const auto t = pareto_ground_truth(b);
    ASSERT_EQ(t.genomes.size(), 100u);
    ASSERT_EQ(t.bitmaps.size(), 100u);
    std::set<std::pair<double, double>> pairs;
    for (const auto& g : t.genomes) {
      for (std::size_t k = 1; k < kControlPoints; ++k) {
        EXPECT_EQ(g.genes[k], g.genes[0]);
        EXPECT_EQ(g.genes[kControlPoints + k], g.genes[kControlPoints]);
      }
      pairs.insert({g.genes[0], g.genes[kControlPoints]});
      EXPECT_NEAR(shape_fitness(express(g, b)), 1.0, 1e-9);
    }
    EXPECT_EQ(pairs.size(), 100u);
    EXPECT_EQ(t.genomes.front().genes[0], b.radial_min);
    EXPECT_EQ(t.genomes.back().genes[0], b.radial_max);
    EXPECT_EQ(t.genomes.front().genes[kControlPoints], b.angular_min);
    EXPECT_EQ(t.genomes.back().genes[kControlPoints], b.angular_max);
  }
}

TEST(ParetoGroundTruth, CaseEMirrorsNegativeRadii) {
  const auto t = pareto_ground_truth(neutrality_case('E'));
  std::size_t duplicates = 0;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 10; ++j) {
      const auto& neg = t.genomes[i * 10 + j];
      const auto& pos = t.genomes[(9 - i) * 10 + j];
      ASSERT_LT(neg.genes[0], 0.0);
      ASSERT_DOUBLE_EQ(neg.genes[0], -pos.genes[0]);
      if (pixel_error(t.bitmaps[i * 10 + j], t.bitmaps[(9 - i) * 10 + j]) == 0) ++duplicates;
    }
  EXPECT_GT(duplicates, 0u);
}

TEST(ParetoDistance, Examples) {
  const auto t = pareto_ground_truth(neutrality_case('B'));
  const auto d = pareto_distance(std::span<const Bitmap>(&t.bitmaps[37], 1), t.bitmaps);
  EXPECT_EQ(d, std::vector<double>{0.0});

  const Bitmap empty;
  std::size_t fewest = kPixels;
  for (const auto& b : t.bitmaps) fewest = std::min(fewest, b.count());
  EXPECT_EQ(pareto_distance(std::span<const Bitmap>(&empty, 1), t.bitmaps)[0], static_cast<double>(fewest));

  EXPECT_THROW(pareto_distance(t.bitmaps, {}), std::invalid_argument);
}

TEST(ParetoDistance, MatchesDoubleLoopOracle) {
  std::mt19937_64 rng(5);
  std::vector<Bitmap> sol, truth;
  for (int i = 0; i < 10; ++i) sol.push_back(random_bitmap(rng));
  for (int i = 0; i < 7; ++i) truth.push_back(random_bitmap(rng));
  const auto d = pareto_distance(sol, truth);
  for (std::size_t s = 0; s < sol.size(); ++s) {
    std::size_t best = kPixels + 1;
    for (const auto& t : truth) {
      std::size_t n = 0;
      for (std::size_t j = 0; j < kRaster; ++j)
        for (std::size_t i = 0; i < kRaster; ++i) n += sol[s].get(i, j) != t.get(i, j);
      best = std::min(best, n);
    }
    EXPECT_EQ(d[s], static_cast<double>(best));
  }
}

TEST(Median, OddAndEven) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
  EXPECT_THROW(median({}), std::invalid_argument);
}

TEST(ExperimentConfig, PresetsAndBudget) {
  const auto d = ExperimentConfig::desk(Study::neutrality_sweep);
  EXPECT_EQ(d.generations, 256u);
  EXPECT_EQ(d.solutions, 100u);
  EXPECT_EQ(d.seeds.size(), 5u);
  EXPECT_EQ(d.eval_budget(), 100u * 257u);
  const auto f = ExperimentConfig::full(Study::bin_sweep);
  EXPECT_EQ(f.generations, 1024u);
  EXPECT_EQ(f.solutions, 400u);
  EXPECT_NO_THROW(d.validate());
  EXPECT_NO_THROW(f.validate());
}

TEST(ExperimentConfig, Validation) {
  auto c = ExperimentConfig::desk(Study::bin_sweep);
  c.replicates = 4;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ExperimentConfig::desk(Study::bin_sweep);
  c.algorithms = {"ve_feature", "bogus"};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ExperimentConfig::desk(Study::bin_sweep);
  c.cases = {'Z'};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ExperimentConfig::desk(Study::bin_sweep);
  c.seeds = {1, 1, 2, 3, 4};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_TRUE(is_known_algorithm("autove_10"));
  EXPECT_FALSE(is_known_algorithm("autove_"));
  EXPECT_FALSE(is_known_algorithm("autove_0"));
  EXPECT_EQ(study_from_string("neutrality"), Study::neutrality_sweep);
  EXPECT_THROW(study_from_string("nope"), std::invalid_argument);
}

TEST(Cells, CountsPerStudy) {
  EXPECT_EQ(enumerate_cells(ExperimentConfig::desk(Study::bin_sweep)).size(), 50u);
  EXPECT_EQ(enumerate_cells(ExperimentConfig::desk(Study::neutrality_sweep)).size(), 75u);
  EXPECT_EQ(enumerate_cells(ExperimentConfig::desk(Study::pareto_distance)).size(), 20u);
  EXPECT_EQ(enumerate_cells(ExperimentConfig::desk(Study::autove_compare)).size(), 15u);
  std::set<std::string> keys;
  for (const auto& c : enumerate_cells(ExperimentConfig::desk(Study::neutrality_sweep))) keys.insert(c.key());
  EXPECT_EQ(keys.size(), 75u);
}

TEST(RunCell, EveryAlgorithmSharesTheBudget) {
  auto cfg = tiny(Study::neutrality_sweep);
  cfg.train.epochs = 2;
  cfg.train.batch_size = 4;
  const std::size_t bins = 6;
  for (const std::string a : {"ve_genetic", "ve_feature", "rls", "nsga2", "autove_2"}) {
    const auto run = run_cell(cfg, {cfg.study, 'C', a, bins, 3});
    EXPECT_EQ(run.solutions.size(), bins) << a;
    if (a == "rls") {
      EXPECT_LE(run.evaluations, cfg.eval_budget(bins));
      EXPECT_GE(run.evaluations, bins);
    } else {
      EXPECT_EQ(run.evaluations, cfg.eval_budget(bins)) << a;
    }
  }
}

TEST(ResultsCsv, RowRoundTrip) {
  RunResult r;
  r.study = "bin_sweep";
  r.bounds_case = 'C';
  r.algorithm = "ve_feature";
  r.bins = 25;
  r.seed = 4;
  r.genetic = {1.0 / 3.0, 2.5, 1e-7};
  r.phenotypic = {0.1, 0.2, 0.30000000000000004};
  r.fitness_median = 0.9;
  r.pareto_px_min_median = 12.5;
  const auto back = parse_row(format_row(r));
  EXPECT_EQ(format_row(back), format_row(r));
  EXPECT_EQ(back.genetic.sdnn, r.genetic.sdnn);
  EXPECT_EQ(back.phenotypic.pd, r.phenotypic.pd);
  EXPECT_EQ(back.key(), r.key());
  EXPECT_THROW(parse_row("a,b,c"), std::runtime_error);
}

TEST(RunStudy, RowsInCanonicalOrderWithArtifacts) {
  const auto dir = fresh_dir("canonical");
  const auto cfg = tiny(Study::bin_sweep);
  StudyOptions opt;
  opt.runner = fake_run;
  opt.threads = 3;
  const auto rep = run_study(cfg, dir, opt);
  const auto cells = enumerate_cells(cfg);
  ASSERT_EQ(rep.rows.size(), cells.size());
  EXPECT_EQ(rep.executed, cells.size());
  EXPECT_TRUE(rep.failures.empty());
  const auto csv = read_results_csv(dir / "results.csv");
  ASSERT_EQ(csv.size(), cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    EXPECT_EQ(csv[i].key(), cells[i].key());
    EXPECT_EQ(csv[i].wall_ms, 0.0);
    std::ifstream art(dir / "cells" / (cells[i].key() + ".csv"));
    const auto f = read_archive_csv(art);
    EXPECT_EQ(f.elites.size(), cells[i].bins);
    ASSERT_EQ(f.extra.size(), 3u);
    EXPECT_EQ(f.extra[2].name, "pareto_px");
    EXPECT_EQ(median(f.extra[2].values), csv[i].pareto_px_min_median);
    std::vector<double> fit;
    for (const auto& e : f.elites) fit.push_back(e.fitness);
    EXPECT_EQ(median(fit), csv[i].fitness_median);
  }
}

TEST(RunStudy, ParallelAndSerialRunsAreByteIdentical) {
  const auto cfg = tiny(Study::neutrality_sweep);
  StudyOptions serial, parallel;
  serial.runner = parallel.runner = fake_run;
  serial.threads = 1;
  parallel.threads = 4;
  const auto a = fresh_dir("serial"), b = fresh_dir("parallel");
  run_study(cfg, a, serial);
  run_study(cfg, b, parallel);
  EXPECT_EQ(slurp(a / "results.csv"), slurp(b / "results.csv"));
  for (const auto& c : enumerate_cells(cfg))
    EXPECT_EQ(slurp(a / "cells" / (c.key() + ".csv")), slurp(b / "cells" / (c.key() + ".csv")));
}

TEST(RunStudy, ResumeRunsOnlyMissingCells) {
  const auto cfg = tiny(Study::neutrality_sweep);
  const auto cells = enumerate_cells(cfg);
  const auto full = fresh_dir("resume_ref"), dir = fresh_dir("resume");
  StudyOptions ref;
  ref.runner = fake_run;
  run_study(cfg, full, ref);

  // An interrupted run: cells after the seventh never complete.
  std::set<std::string> first;
  for (std::size_t i = 0; i < 7; ++i) first.insert(cells[i].key());
  StudyOptions broken;
  broken.threads = 1;
  broken.runner = [&](const ExperimentConfig& c, const Cell& cell) {
    if (first.count(cell.key()) == 0) throw std::runtime_error("interrupted");
    return fake_run(c, cell);
  };
  const auto partial = run_study(cfg, dir, broken);
  EXPECT_EQ(partial.rows.size(), 7u);
  EXPECT_EQ(partial.failures.size(), cells.size() - 7);

  std::set<std::string> executed;
  StudyOptions resume;
  resume.threads = 1;
  resume.runner = [&](const ExperimentConfig& c, const Cell& cell) {
    executed.insert(cell.key());
    return fake_run(c, cell);
  };
  const auto rep = run_study(cfg, dir, resume);
  EXPECT_EQ(rep.skipped, 7u);
  EXPECT_EQ(rep.executed, cells.size() - 7);
  for (const auto& k : first) EXPECT_EQ(executed.count(k), 0u) << k;
  EXPECT_EQ(slurp(dir / "results.csv"), slurp(full / "results.csv"));
}

TEST(RunStudy, RowWithoutManifestEntryIsRerun) {
  const auto cfg = tiny(Study::pareto_distance);
  const auto dir = fresh_dir("orphan");
  StudyOptions opt;
  opt.runner = fake_run;
  run_study(cfg, dir, opt);
  const auto cells = enumerate_cells(cfg);
  // Drop the manifest entry of the first cell, as if the process died
  // between appending its row and recording it.
  std::ifstream in(dir / "manifest.txt");
  std::string line, kept;
  while (std::getline(in, line))
    if (line.find(cells.front().key() + " ") == std::string::npos) kept += line + "\n";
  in.close();
  std::ofstream(dir / "manifest.txt", std::ios::trunc) << kept;
  const auto rep = run_study(cfg, dir, opt);
  EXPECT_EQ(rep.executed, 1u);
  EXPECT_EQ(rep.rows.size(), cells.size());
}

TEST(RunStudy, FailedCellIsRecordedAndOthersProceed) {
  const auto cfg = tiny(Study::pareto_distance);
  const auto cells = enumerate_cells(cfg);
  const auto bad = cells[2].key();
  StudyOptions opt;
  opt.threads = 2;
  opt.runner = [&](const ExperimentConfig& c, const Cell& cell) {
    if (cell.key() == bad) throw std::runtime_error("boom");
    return fake_run(c, cell);
  };
  const auto dir = fresh_dir("failure");
  const auto rep = run_study(cfg, dir, opt);
  ASSERT_EQ(rep.failures.size(), 1u);
  EXPECT_EQ(rep.failures[0].key, bad);
  EXPECT_EQ(rep.failures[0].message, "boom");
  EXPECT_EQ(rep.rows.size(), cells.size() - 1);
  EXPECT_NE(slurp(dir / "manifest.txt").find("failed " + bad + " boom"), std::string::npos);
}

TEST(RunStudy, RealCellRerunIsByteIdentical) {
  auto cfg = tiny(Study::neutrality_sweep);
  cfg.cases = {'C'};
  cfg.seeds = {7};
  cfg.replicates = 1;
  const auto a = fresh_dir("real_a"), b = fresh_dir("real_b");
  const auto ra = run_study(cfg, a);
  const auto rb = run_study(cfg, b);
  ASSERT_EQ(ra.rows.size(), 3u);
  ASSERT_TRUE(ra.failures.empty());
  EXPECT_EQ(slurp(a / "results.csv"), slurp(b / "results.csv"));
  for (const auto& c : enumerate_cells(cfg))
    EXPECT_EQ(slurp(a / "cells" / (c.key() + ".csv")), slurp(b / "cells" / (c.key() + ".csv")));
  for (const auto& r : ra.rows) {
    for (double v : {r.genetic.sdnn, r.genetic.spd, r.genetic.pd, r.phenotypic.sdnn, r.phenotypic.spd,
                     r.phenotypic.pd, r.fitness_median, r.pareto_px_min_median})
      EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(RunStudy, DiversityUsesTheFitnessSolutionSet) {
  ExperimentConfig cfg = tiny(Study::neutrality_sweep);
  const Cell cell{cfg.study, 'B', "ve_feature", 6, 2};
  const auto run = run_cell(cfg, cell);
  const auto r = summarize(cfg, cell, run);
  std::vector<Genome> g;
  std::vector<Bitmap> b;
  std::vector<double> f;
  for (const auto& s : run.solutions) {
    g.push_back(s.genome);
    b.push_back(s.bitmap);
    f.push_back(s.fitness);
  }
  EXPECT_EQ(r.genetic.sdnn, genetic_diversity(g).sdnn);
  EXPECT_EQ(r.phenotypic.spd, phenotypic_diversity(b).spd);
  EXPECT_EQ(r.fitness_median, median(f));
}

TEST(Nsga2Pareto, PixelErrorToGroundTruthDecreases) {
  const auto b = neutrality_case('B');
  const auto truth = pareto_ground_truth(b);
  NSGA2Config cfg;
  cfg.population = 40;
  cfg.generations = 60;
  cfg.bounds = b;
  cfg.seed = 11;
  std::vector<double> medians;
  nsga2_run(cfg, [&](std::size_t, const std::vector<Individual>& pop) {
    std::vector<Bitmap> bm;
    for (const auto& ind : pop) bm.push_back(ind.eval.bitmap);
    medians.push_back(median(pareto_distance(bm, truth.bitmaps)));
  });
  ASSERT_GE(medians.size(), 2u);
  EXPECT_LT(medians.back(), medians.front());
}

}  // namespace
