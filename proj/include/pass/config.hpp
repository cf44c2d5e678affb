// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "pass/coupling.hpp"
#include "pass/harness.hpp"

// INI configuration with sections [scenario], [coupling], [solver], [experiment].
// Unknown sections or keys are rejected.

namespace pass::config {

struct CouplingConfig {
  coupling::CouplingParams params;
  std::string active = "111111";    // spacing-plan activation along one waveguide, '|' separates waveguides
  std::vector<double> targets;      // optional per-antenna target ratios
  std::string samples;              // coupling-fit input CSV; empty generates oracle samples
  coupling::Shape shape = coupling::Shape::Rectangular;
  double half_width = 5.0;          // mm
  double n_eff = 1.4;
  double n_clad = 1.0;
  double wavelength = 20.0;         // mm
  double index_contrast = 0.01;
  double target_alpha = 0.24615;    // mm^-1, back-solves the transverse wavenumber
  double fit_min = 0.0;             // mm; 0 selects 2b
  double fit_max = 0.0;             // mm; 0 selects fit_min + 20
  int fit_points = 41;
};

struct Config {
  ExperimentSpec experiment;
  CouplingConfig coupling;
  bool has_sweep = false;
};

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, sep)) {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? "" : cur.substr(b, e - b + 1));
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument(what + ": not a number: '" + s + "'");
  }
  if (pos != s.size()) throw std::invalid_argument(what + ": trailing characters in '" + s + "'");
  return v;
}

inline std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : split(s, ','))
    if (!item.empty()) out.push_back(parse_double(item, what));
  return out;
}

/// "key=v1,v2,..."
inline void apply_sweep(ExperimentSpec& spec, const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw std::invalid_argument("sweep: expected key=v1,v2,...");
  spec.sweep_key = text.substr(0, eq);
  spec.sweep_values = parse_list(text.substr(eq + 1), "sweep");
  Scenario probe = spec.base;
  for (double v : spec.sweep_values) apply_setting(probe, spec.sweep_key, v);
}

inline bool parse_bool(const std::string& s, const std::string& what) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::invalid_argument(what + ": not a boolean: '" + s + "'");
}

inline Config parse(std::istream& is) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  const std::set<std::string> sections{"scenario", "coupling", "solver", "experiment"};
  for (const auto& [name, _] : tree)
    if (!sections.count(name)) throw std::invalid_argument("config: unknown section [" + name + "]");

  Config cfg;
  ExperimentSpec& spec = cfg.experiment;
  spec.base = paper_small_preset();

  if (auto sc = tree.get_child_optional("scenario")) {
    if (auto preset = sc->get_optional<std::string>("preset"))
      if (*preset != "paper-small") throw std::invalid_argument("config: unknown preset " + *preset);
    for (const auto& [key, node] : *sc) {
      const std::string v = node.data();
      if (key == "preset") continue;
      if (key == "users") {
        spec.base.user_positions.clear();
        for (const auto& item : split(v, ';')) {
          if (item.empty()) continue;
          const auto xy = split(item, ':');
          if (xy.size() != 2) throw std::invalid_argument("config: users expects x:y;x:y;...");
          spec.base.user_positions.push_back({parse_double(xy[0], "users"), parse_double(xy[1], "users")});
        }
        spec.random_users = false;
        continue;
      }
      apply_setting(spec.base, key, parse_double(v, "scenario." + key));
    }
    if (!spec.random_users && static_cast<int>(spec.base.user_positions.size()) != spec.base.num_users)
      throw std::invalid_argument("config: users lists a different count than num_users");
  }

  if (auto cp = tree.get_child_optional("coupling")) {
    CouplingConfig& c = cfg.coupling;
    for (const auto& [key, node] : *cp) {
      const std::string v = node.data();
      const std::string what = "coupling." + key;
      if (key == "omega0") c.params.omega0 = parse_double(v, what);
      else if (key == "alpha") c.params.alpha = parse_double(v, what);
      else if (key == "d_pa") c.params.d_pa = parse_double(v, what);
      else if (key == "active") c.active = v;
      else if (key == "targets") c.targets = parse_list(v, what);
      else if (key == "samples") c.samples = v;
      else if (key == "shape") {
        if (v == "rectangular") c.shape = coupling::Shape::Rectangular;
        else if (v == "circular") c.shape = coupling::Shape::Circular;
        else throw std::invalid_argument(what + ": expected rectangular or circular");
      } else if (key == "half_width") c.half_width = parse_double(v, what);
      else if (key == "n_eff") c.n_eff = parse_double(v, what);
      else if (key == "n_clad") c.n_clad = parse_double(v, what);
      else if (key == "wavelength") c.wavelength = parse_double(v, what);
      else if (key == "index_contrast") c.index_contrast = parse_double(v, what);
      else if (key == "target_alpha") c.target_alpha = parse_double(v, what);
      else if (key == "fit_min") c.fit_min = parse_double(v, what);
      else if (key == "fit_max") c.fit_max = parse_double(v, what);
      else if (key == "fit_points") c.fit_points = static_cast<int>(parse_double(v, what));
      else throw std::invalid_argument("config: unknown key " + what);
    }
  }

  if (auto so = tree.get_child_optional("solver")) {
    SolverSettings& s = spec.settings;
    for (const auto& [key, node] : *so) {
      const std::string v = node.data();
      const std::string what = "solver." + key;
      if (key == "epsilon") s.epsilon = parse_double(v, what);
      else if (key == "count_mode") {
        if (v == "per-waveguide") s.count_mode = CountMode::PerWaveguideSearch;
        else if (v == "equal") s.count_mode = CountMode::EqualCounts;
        else throw std::invalid_argument(what + ": expected per-waveguide or equal");
      } else if (key == "time_limit") s.time_limit = parse_double(v, what);
      else if (key == "max_iterations") s.max_iterations = static_cast<long>(parse_double(v, what));
      else if (key == "grid_points") s.grid_points = static_cast<int>(parse_double(v, what));
      else if (key == "grid_sweeps") s.grid_sweeps = static_cast<int>(parse_double(v, what));
      else if (key == "max_rounds") s.max_rounds = static_cast<int>(parse_double(v, what));
      else if (key == "margin") s.margin = parse_double(v, what);
      else throw std::invalid_argument("config: unknown key " + what);
    }
  }

  if (auto ex = tree.get_child_optional("experiment")) {
    for (const auto& [key, node] : *ex) {
      const std::string v = node.data();
      const std::string what = "experiment." + key;
      if (key == "solvers") {
        spec.solvers.clear();
        for (const auto& s : split(v, ','))
          if (!s.empty()) spec.solvers.push_back(s);
      } else if (key == "sweep") {
        apply_sweep(spec, v);
        cfg.has_sweep = true;
      } else if (key == "trials") spec.trials = static_cast<int>(parse_double(v, what));
      else if (key == "seed") spec.seed = static_cast<std::uint64_t>(parse_double(v, what));
      else if (key == "random_users") spec.random_users = parse_bool(v, what);
      else throw std::invalid_argument("config: unknown key " + what);
    }
  }
  for (const auto& s : spec.solvers)
    if (std::find(known_solvers().begin(), known_solvers().end(), s) == known_solvers().end())
      throw std::invalid_argument("config: unknown solver " + s);
  if (!spec.random_users && spec.base.user_positions.empty())
    throw std::invalid_argument("config: random_users = false needs scenario.users");
  return cfg;
}

inline Config parse_string(const std::string& text) {
  std::istringstream is(text);
  return parse(is);
}

}  // namespace pass::config
