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
 * \file polyqd/config.hpp
 *
 * \brief Study configuration files: INI sections of key = value pairs.
 *
 * \code
 * [study]
 * ; bin_sweep | neutrality_sweep | pareto_distance | autove_compare
 * name = neutrality_sweep
 * ; desk: 256 generations, 100 solutions; full: 1024, 400
 * preset = desk
 * cases = A,B,C,D,E
 * algorithms = ve_feature,rls,nsga2
 * ; bin_sweep only
 * bins = 25,50,100,200,400
 * solutions = 100
 * generations = 256
 * ; a range or a comma list
 * seeds = 1..5
 * ; defaults to the number of seeds
 * replicates = 5
 * record_timing = false
 *
 * [ve]
 * mutation_sigma = 0.1
 *
 * [rls]
 * step_size = 0.065
 *
 * [nsga2]
 * crossover_prob = 0.9
 * mutation_prob = 0.0625
 * sbx_eta = 20
 *
 * [autoencoder]
 * epochs = 350
 * batch_size = 32
 * learning_rate = 0.001
 *
 * [metrics]
 * spd_theta_genetic = 1
 * spd_theta_phenotypic = 100
 * pd_norm_exponent = 0.1
 *
 * [output]
 * dir = results/neutrality
 * \endcode
 *
 * Comments take whole lines. Every key is optional. Precedence: command-line overrides, then file
 * values, then the preset. Unknown sections or keys are rejected.
 */

#ifndef POLYQD_CONFIG_HPP
#define POLYQD_CONFIG_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "polyqd/experiments.hpp"

namespace polyqd {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ConfigTree = boost::property_tree::ptree;

inline const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema{
      {"study",
       {"name", "preset", "cases", "algorithms", "bins", "solutions", "generations", "seeds", "replicates",
        "record_timing"}},
      {"ve", {"mutation_sigma"}},
      {"rls", {"step_size"}},
      {"nsga2", {"crossover_prob", "mutation_prob", "sbx_eta"}},
      {"autoencoder", {"epochs", "batch_size", "learning_rate"}},
      {"metrics", {"spd_theta_genetic", "spd_theta_phenotypic", "pd_norm_exponent"}},
      {"output", {"dir"}},
  };
  return schema;
}

/// Dotted names (section.key) absent from the schema, in file order.
inline std::vector<std::string> unknown_config_keys(const ConfigTree& tree) {
  std::vector<std::string> out;
  const auto& schema = config_schema();
  for (const auto& [section, body] : tree) {
    const auto it = schema.find(section);
    if (body.empty()) {
      out.push_back(section);
      continue;
    }
    for (const auto& [key, value] : body)
      if (it == schema.end() || it->second.count(key) == 0) out.push_back(section + "." + key);
  }
  return out;
}

inline ConfigTree parse_config(std::istream& is) {
  ConfigTree tree;
  try {
    boost::property_tree::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }
  const auto unknown = unknown_config_keys(tree);
  if (!unknown.empty()) {
    std::string msg = "config: unknown keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }
  return tree;
}

inline ConfigTree read_config_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("config: cannot open " + p.string());
  return parse_config(in);
}

/// "1..5" or "1,2,7".
inline std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  auto number = [&](const std::string& t) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != t.size() || t[0] == '-') throw ConfigError("bad seed list '" + s + "'");
    return static_cast<std::uint64_t>(v);
  };
  const auto dots = s.find("..");
  if (dots != std::string::npos) {
    const auto lo = number(s.substr(0, dots));
    const auto hi = number(s.substr(dots + 2));
    if (hi < lo || hi - lo >= 100000) throw ConfigError("bad seed range '" + s + "'");
    for (auto v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(number(tok));
  if (out.empty()) throw ConfigError("empty seed list");
  return out;
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto a = tok.find_first_not_of(" \t");
    const auto b = tok.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(tok.substr(a, b - a + 1));
  }
  return out;
}

template <typename T>
T get_value(const ConfigTree& tree, const std::string& path) {
  try {
    return tree.get<T>(path);
  } catch (const boost::property_tree::ptree_error&) {
    throw ConfigError("config: bad value for " + path + " ('" + tree.get<std::string>(path, "") + "')");
  }
}

inline std::size_t get_count(const ConfigTree& tree, const std::string& path) {
  const auto s = tree.get<std::string>(path);
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("config: " + path + " must be a nonnegative integer ('" + s + "')");
  return std::stoul(s);
}

inline bool get_flag(const ConfigTree& tree, const std::string& path) {
  const auto s = tree.get<std::string>(path);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("config: " + path + " must be true or false ('" + s + "')");
}

}  // namespace detail

struct ConfigOverrides {
  std::optional<std::string> study;
  std::optional<std::string> preset;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::string> output_dir;
};

struct RunSettings {
  ExperimentConfig experiment;
  std::string output_dir;
};

inline ExperimentConfig preset_config(Study s, const std::string& preset) {
  if (preset == "desk") return ExperimentConfig::desk(s);
  if (preset == "full") return ExperimentConfig::full(s);
  throw ConfigError("unknown preset '" + preset + "' (expected desk or full)");
}

/// Resolves a study configuration from an optional parsed file and
/// command-line overrides. The replicate count follows the seeds unless the
/// file sets it.
inline RunSettings resolve_run_settings(const ConfigTree& tree, const ConfigOverrides& o = {}) {
  using detail::get_count;
  using detail::get_value;
  std::string study_name;
  if (o.study)
    study_name = *o.study;
  else if (auto v = tree.get_optional<std::string>("study.name"))
    study_name = *v;
  else
    throw ConfigError("no study given (set study.name or pass --study)");
  Study study;
  try {
    study = study_from_string(study_name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const std::string preset = o.preset ? *o.preset : tree.get<std::string>("study.preset", "desk");

  RunSettings out;
  auto& c = out.experiment;
  c = preset_config(study, preset);

  if (auto v = tree.get_optional<std::string>("study.cases")) {
    c.cases.clear();
    for (const auto& t : detail::split_list(*v)) {
      if (t.size() != 1) throw ConfigError("config: bad case '" + t + "'");
      c.cases.push_back(t[0]);
    }
  }
  if (auto v = tree.get_optional<std::string>("study.algorithms")) c.algorithms = detail::split_list(*v);
  if (auto v = tree.get_optional<std::string>("study.bins")) {
    c.bins.clear();
    for (const auto& t : detail::split_list(*v)) {
      if (t.find_first_not_of("0123456789") != std::string::npos) throw ConfigError("config: bad bins '" + t + "'");
      c.bins.push_back(std::stoul(t));
    }
  }
  if (tree.get_optional<std::string>("study.solutions")) c.solutions = get_count(tree, "study.solutions");
  if (tree.get_optional<std::string>("study.generations")) c.generations = get_count(tree, "study.generations");
  if (auto v = tree.get_optional<std::string>("study.seeds")) c.seeds = parse_seed_list(*v);
  if (o.seeds) c.seeds = *o.seeds;
  c.replicates = tree.get_optional<std::string>("study.replicates") ? get_count(tree, "study.replicates")
                                                                     : c.seeds.size();
  if (tree.get_optional<std::string>("study.record_timing"))
    c.record_timing = detail::get_flag(tree, "study.record_timing");

  if (tree.get_optional<std::string>("ve.mutation_sigma")) c.ve_mutation_sigma = get_value<double>(tree, "ve.mutation_sigma");
  if (tree.get_optional<std::string>("rls.step_size")) c.rls_step_size = get_value<double>(tree, "rls.step_size");
  if (tree.get_optional<std::string>("nsga2.crossover_prob"))
    c.nsga2_crossover_prob = get_value<double>(tree, "nsga2.crossover_prob");
  if (tree.get_optional<std::string>("nsga2.mutation_prob"))
    c.nsga2_mutation_prob = get_value<double>(tree, "nsga2.mutation_prob");
  if (tree.get_optional<std::string>("nsga2.sbx_eta")) c.nsga2_sbx_eta = get_value<double>(tree, "nsga2.sbx_eta");
  if (tree.get_optional<std::string>("autoencoder.epochs")) c.train.epochs = get_count(tree, "autoencoder.epochs");
  if (tree.get_optional<std::string>("autoencoder.batch_size"))
    c.train.batch_size = get_count(tree, "autoencoder.batch_size");
  if (tree.get_optional<std::string>("autoencoder.learning_rate"))
    c.train.learning_rate = get_value<double>(tree, "autoencoder.learning_rate");
  if (tree.get_optional<std::string>("metrics.spd_theta_genetic"))
    c.metrics.spd_theta_genetic = get_value<double>(tree, "metrics.spd_theta_genetic");
  if (tree.get_optional<std::string>("metrics.spd_theta_phenotypic"))
    c.metrics.spd_theta_phenotypic = get_value<double>(tree, "metrics.spd_theta_phenotypic");
  if (tree.get_optional<std::string>("metrics.pd_norm_exponent"))
    c.metrics.pd_norm_exponent = get_value<double>(tree, "metrics.pd_norm_exponent");

  out.output_dir = o.output_dir ? *o.output_dir : tree.get<std::string>("output.dir", "results/" + to_string(study));
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return out;
}

}  // namespace polyqd

#endif  // POLYQD_CONFIG_HPP
