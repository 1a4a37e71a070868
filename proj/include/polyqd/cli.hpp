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
 * \file polyqd/cli.hpp
 *
 * \brief The `polyqd` command line: run, metrics, pareto, gallery, plot and
 *  train-ae. Exit codes are 0 on success, 1 on usage or configuration
 *  errors and 2 on runtime failures, including any failed study cell.
 */

#ifndef POLYQD_CLI_HPP
#define POLYQD_CLI_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "polyqd/autoencoder.hpp"
#include "polyqd/config.hpp"
#include "polyqd/experiments.hpp"
#include "polyqd/sampling.hpp"
#include "polyqd/svg.hpp"

namespace polyqd {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitFailure = 2 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace cli_detail {

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

inline ArchiveFile load_archive(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open archive " + path);
  return read_archive_csv(in);
}

inline DomainBounds bounds_for(const ArchiveFile& f, const std::string& case_name) {
  if (case_name.empty()) return f.bounds;
  if (case_name.size() != 1) throw UsageError("--case expects one of A..E");
  try {
    return neutrality_case(case_name[0]);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

inline std::vector<Bitmap> bitmaps_of(const std::vector<Elite>& elites) {
  std::vector<Bitmap> b;
  b.reserve(elites.size());
  for (const auto& e : elites) b.push_back(e.bitmap);
  return b;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace cli_detail

/// Parses and dispatches. `args` excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  namespace fs = std::filesystem;
  CLI::App app{"Diversity studies on an 8-point polygon shape domain", "polyqd"};
  app.require_subcommand(1);

  // run
  std::string config_path, study, preset, seeds, output;
  std::size_t threads = 0;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run a study; writes results.csv, manifest.txt and cells/");
  run->add_option("--config", config_path, "Study configuration file (INI)");
  run->add_option("--study", study, "bin_sweep | neutrality_sweep | pareto_distance | autove_compare");
  run->add_option("--preset", preset, "desk | full")->check(CLI::IsMember({"desk", "full"}));
  run->add_option("--seeds", seeds, "Seed list, e.g. 1..5 or 1,3,9");
  run->add_option("--output", output, "Study directory");
  run->add_option("--threads", threads, "Worker threads (0: all cores; POLYQD_THREADS caps)");
  run->add_flag("--quiet", quiet, "No per-cell progress");

  // metrics
  std::string archive_path, case_name, metrics_out;
  auto* metrics = app.add_subcommand("metrics", "Diversity, fitness and Pareto error of an archive CSV");
  metrics->add_option("--archive", archive_path, "Archive CSV")->required();
  metrics->add_option("--case", case_name, "Bounds case for the Pareto set (default: the file's bounds)");
  metrics->add_option("--output", metrics_out, "Write CSV here instead of stdout");

  // pareto
  std::string pareto_case, pareto_out, pareto_archive;
  auto* pareto = app.add_subcommand("pareto", "Ground-truth Pareto set of a bounds case");
  pareto->add_option("--case", pareto_case, "Bounds case A..E")->required();
  pareto->add_option("--output", pareto_out, "Output directory")->required();
  pareto->add_option("--archive", pareto_archive, "Also write per-solution distances for this archive CSV");

  // gallery
  std::string gallery_archive, gallery_out, gallery_case;
  std::size_t cell = 48;
  auto* gallery = app.add_subcommand("gallery", "SVG grid of archive shapes shaded by Pareto pixel error");
  gallery->add_option("--archive", gallery_archive, "Archive CSV")->required();
  gallery->add_option("--output", gallery_out, "SVG file")->required();
  gallery->add_option("--case", gallery_case, "Bounds case for the Pareto set (default: the file's bounds)");
  gallery->add_option("--cell", cell, "Cell size in pixels")->check(CLI::Range(8, 512));

  // plot
  std::string results_path, plot_out;
  auto* plot = app.add_subcommand("plot", "SVG charts of a results CSV, one per metric");
  plot->add_option("--results", results_path, "results.csv")->required();
  plot->add_option("--output", plot_out, "Output directory")->required();

  // train-ae
  std::string ae_case = "B", ae_out;
  std::size_t samples = 400;
  int latent = 2;
  std::uint64_t seed = 1;
  TrainConfig tc;
  auto* train_ae = app.add_subcommand("train-ae", "Train the autoencoder on Sobol shapes");
  train_ae->add_option("--case", ae_case, "Bounds case A..E");
  train_ae->add_option("--samples", samples, "Sobol shapes")->check(CLI::PositiveNumber);
  train_ae->add_option("--latent", latent, "Latent dimension")->check(CLI::PositiveNumber);
  train_ae->add_option("--epochs", tc.epochs, "Epochs")->check(CLI::PositiveNumber);
  train_ae->add_option("--batch", tc.batch_size, "Batch size")->check(CLI::PositiveNumber);
  train_ae->add_option("--lr", tc.learning_rate, "Adam learning rate");
  train_ae->add_option("--seed", seed, "Initialization and shuffling seed");
  train_ae->add_option("--output", ae_out, "Output directory")->required();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (run->parsed()) {
      if (config_path.empty() && study.empty()) throw UsageError("run needs --config or --study");
      ConfigTree tree;
      if (!config_path.empty()) {
        if (!fs::exists(config_path)) throw UsageError("config file not found: " + config_path);
        tree = read_config_file(config_path);
      }
      ConfigOverrides o;
      if (!study.empty()) o.study = study;
      if (!preset.empty()) o.preset = preset;
      if (!seeds.empty()) o.seeds = parse_seed_list(seeds);
      if (!output.empty()) o.output_dir = output;
      const auto settings = resolve_run_settings(tree, o);
      StudyOptions opt;
      opt.threads = threads;
      if (!quiet)
        opt.progress = [&](const std::string& key, std::size_t done, std::size_t total) {
          err << "[" << done << "/" << total << "] " << key << '\n';
        };
      const auto rep = run_study(settings.experiment, settings.output_dir, opt);
      out << "study " << to_string(settings.experiment.study) << ": " << rep.rows.size() << " rows ("
          << rep.executed << " run, " << rep.skipped << " resumed) in " << settings.output_dir << '\n';
      if (!rep.failures.empty()) {
        for (const auto& f : rep.failures) err << "cell failed: " << f.key << ": " << f.message << '\n';
        return kExitFailure;
      }
      return kExitOk;
    }

    if (metrics->parsed()) {
      const auto f = cli_detail::load_archive(archive_path);
      if (f.elites.empty()) throw std::runtime_error("archive is empty");
      const auto bounds = cli_detail::bounds_for(f, case_name);
      std::vector<Genome> g;
      std::vector<double> fit;
      for (const auto& e : f.elites) {
        g.push_back(e.genome);
        fit.push_back(e.fitness);
      }
      const auto bm = cli_detail::bitmaps_of(f.elites);
      const auto gd = genetic_diversity(g);
      const auto pd = phenotypic_diversity(bm);
      const auto px = pareto_distance(bm, pareto_ground_truth(bounds).bitmaps);
      std::ostringstream os;
      using cli_detail::fmt;
      os << "solutions,sdnn_gen,spd_gen,pd_gen,sdnn_phen,spd_phen,pd_phen,fitness_median,pareto_px_min_median\n"
         << f.elites.size() << ',' << fmt(gd.sdnn) << ',' << fmt(gd.spd) << ',' << fmt(gd.pd) << ',' << fmt(pd.sdnn)
         << ',' << fmt(pd.spd) << ',' << fmt(pd.pd) << ',' << fmt(median(fit)) << ',' << fmt(median(px)) << '\n';
      if (metrics_out.empty())
        out << os.str();
      else
        cli_detail::write_file(metrics_out, os.str());
      return kExitOk;
    }

    if (pareto->parsed()) {
      if (pareto_case.size() != 1) throw UsageError("--case expects one of A..E");
      DomainBounds b;
      try {
        b = neutrality_case(pareto_case[0]);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const auto t = pareto_ground_truth(b);
      std::vector<Elite> elites;
      for (const auto& g : t.genomes) {
        auto e = evaluate(g, b);
        Elite el;
        el.genome = g;
        el.fitness = e.fitness;
        elites.push_back(std::move(el));
      }
      std::ostringstream csv;
      write_archive_csv(csv, elites, b);
      const fs::path dir(pareto_out);
      cli_detail::write_file(dir / "ground_truth.csv", csv.str());
      const std::vector<double> zeros(t.bitmaps.size(), 0.0);
      cli_detail::write_file(dir / "ground_truth.svg", render_gallery(t.bitmaps, zeros));
      if (!pareto_archive.empty()) {
        const auto f = cli_detail::load_archive(pareto_archive);
        const auto px = pareto_distance(cli_detail::bitmaps_of(f.elites), t.bitmaps);
        std::string d = "index,pareto_px\n";
        for (std::size_t i = 0; i < px.size(); ++i) d += std::to_string(i) + "," + cli_detail::fmt(px[i]) + "\n";
        cli_detail::write_file(dir / "pareto_distance.csv", d);
      }
      out << "wrote " << (dir / "ground_truth.csv").string() << '\n';
      return kExitOk;
    }

    if (gallery->parsed()) {
      const auto f = cli_detail::load_archive(gallery_archive);
      const auto bounds = cli_detail::bounds_for(f, gallery_case);
      const auto bm = cli_detail::bitmaps_of(f.elites);
      const auto px = pareto_distance(bm, pareto_ground_truth(bounds).bitmaps);
      cli_detail::write_file(gallery_out, render_gallery(bm, px, cell));
      out << "wrote " << gallery_out << '\n';
      return kExitOk;
    }

    if (plot->parsed()) {
      const auto rows = read_results_csv(fs::path(results_path));
      if (rows.empty()) throw std::runtime_error("results file has no rows: " + results_path);
      for (const auto& [name, chart] : build_result_charts(rows))
        cli_detail::write_file(fs::path(plot_out) / name, render_line_chart(chart));
      out << "wrote " << result_metrics().size() << " charts to " << plot_out << '\n';
      return kExitOk;
    }

    if (train_ae->parsed()) {
      if (ae_case.size() != 1) throw UsageError("--case expects one of A..E");
      DomainBounds b;
      try {
        b = neutrality_case(ae_case[0]);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      tc.seed = seed;
      std::vector<Bitmap> data;
      for (const auto& g : sobol_genomes(samples, b)) data.push_back(rasterize(express(g, b)));
      CAEModel<float> model(latent, seed);
      if (tc.batch_size > data.size()) tc.batch_size = data.size();
      const auto history = train(model, std::span<const Bitmap>(data), tc);
      const auto norm = LatentNormalizer::fit(encode_all(model, std::span<const Bitmap>(data)));
      const fs::path dir(ae_out);
      std::ostringstream weights, manifest;
      save_weights(weights, model);
      write_model_manifest(manifest, model, tc, &norm);
      cli_detail::write_file(dir / "weights.bin", weights.str());
      cli_detail::write_file(dir / "weights.manifest", manifest.str());
      std::string loss = "epoch,loss\n";
      for (std::size_t e = 0; e < history.size(); ++e)
        loss += std::to_string(e + 1) + "," + cli_detail::fmt(history[e]) + "\n";
      cli_detail::write_file(dir / "loss.csv", loss);
      out << "loss " << cli_detail::fmt(history.front()) << " -> " << cli_detail::fmt(history.back()) << '\n';
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace polyqd

#endif  // POLYQD_CLI_HPP
