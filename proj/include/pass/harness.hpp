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
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "pass/beamforming.hpp"
#include "pass/bnb_multi.hpp"
#include "pass/bnb_single.hpp"
#include "pass/channel.hpp"
#include "pass/geometry.hpp"
#include "pass/matching.hpp"
#include "pass/scenario.hpp"
#include "pass/units.hpp"

namespace pass {

// ---------------------------------------------------------------------------
// Baselines

/// Fully digital K-antenna array at (0, (i - (K-1)/2) lambda/2, h).
inline FixedSolve baseline_mimo(const Scenario& s) {
  s.validate();
  const int K = s.num_users;
  const double lambda = s.carrier_wavelength();
  const double amp = std::sqrt(reference_gain(s.carrier_freq));
  Eigen::MatrixXcd H(K, K);
  for (int i = 0; i < K; ++i) {
    const Eigen::Vector3d a(0.0, (i - (K - 1) / 2.0) * lambda / 2.0, s.height);
    for (int k = 0; k < K; ++k) {
      const auto& u = s.user_positions[static_cast<std::size_t>(k)];
      const double d = (Eigen::Vector3d(u.x, u.y, 0.0) - a).norm();
      H(i, k) = std::conj(amp / d * propagation_phase(d, lambda));
    }
  }
  return solve_fixed_channel(H, s.sinr_min, s.noise_power);
}

/// Channels for arbitrary offsets along each waveguide; offsets[n] lists the
/// active antennas of waveguide n (may differ in length).
inline std::pair<ChannelSet, ActivationPattern> channels_at_offsets(
    const Scenario& s, const std::vector<std::vector<double>>& offsets) {
  int L = 1;
  for (const auto& o : offsets) L = std::max(L, static_cast<int>(o.size()));
  Geometry g;
  g.num_waveguides = s.num_waveguides;
  g.antennas_per_waveguide = L;
  g.carrier_wavelength = s.carrier_wavelength();
  g.guided_wavelength = s.guided_wavelength();
  ActivationPattern p(L, s.num_waveguides);
  for (int n = 0; n < s.num_waveguides; ++n) {
    const auto& wg = s.waveguides[static_cast<std::size_t>(n)];
    const auto& o = offsets[static_cast<std::size_t>(n)];
    g.feed_points.emplace_back(wg.feed_x, wg.feed_y, s.height);
    for (int l = 0; l < L; ++l) {
      const bool on = l < static_cast<int>(o.size());
      // Inactive slots sit at the feed end; they carry no signal.
      const double off = on ? o[static_cast<std::size_t>(l)] : 0.0;
      g.antenna_positions.push_back(point_on_waveguide(wg, off, s.height));
      p.set(l, n, on);
    }
  }
  for (const auto& u : s.user_positions) g.user_positions.emplace_back(u.x, u.y, 0.0);
  ChannelSet ch;
  free_space_channels(g, s.carrier_freq, ch);
  in_waveguide_phases(g, ch);
  return {std::move(ch), std::move(p)};
}

struct ContinuousResult {
  bool feasible = false;
  double power = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> offsets;
  long evaluations = 0;
};

/// Coordinate descent over antenna offsets restricted to a cell-centred grid of
/// grid_points per waveguide. counts[n] antennas on waveguide n; init (optional)
/// gives starting offsets, snapped to the grid.
inline ContinuousResult continuous_grid_search(const Scenario& s, const std::vector<int>& counts,
                                               int grid_points = 50, int sweeps = 3,
                                               const std::vector<std::vector<double>>* init = nullptr) {
  s.validate();
  if (grid_points < 1) throw std::invalid_argument("continuous_grid_search: grid_points must be >= 1");
  if (static_cast<int>(counts.size()) != s.num_waveguides)
    throw std::invalid_argument("continuous_grid_search: counts size differs from num_waveguides");
  const int N = s.num_waveguides;
  std::vector<std::vector<int>> idx(static_cast<std::size_t>(N));
  auto grid = [&](int n, int g) { return grid_offset(s.span_of(s.waveguides[static_cast<std::size_t>(n)]), g, grid_points); };
  for (int n = 0; n < N; ++n) {
    const int c = counts[static_cast<std::size_t>(n)];
    if (c < 1) throw std::invalid_argument("continuous_grid_search: every waveguide needs an antenna");
    const double span = s.span_of(s.waveguides[static_cast<std::size_t>(n)]);
    for (int j = 0; j < c; ++j) {
      double target = grid_offset(span, j, c);
      if (init && j < static_cast<int>((*init)[static_cast<std::size_t>(n)].size()))
        target = (*init)[static_cast<std::size_t>(n)][static_cast<std::size_t>(j)];
      const int g = static_cast<int>(std::floor(target / span * grid_points));
      idx[static_cast<std::size_t>(n)].push_back(std::clamp(g, 0, grid_points - 1));
    }
  }
  ContinuousResult res;
  auto evaluate = [&](const std::vector<std::vector<int>>& cur) {
    std::vector<std::vector<double>> off(static_cast<std::size_t>(N));
    for (int n = 0; n < N; ++n)
      for (int g : cur[static_cast<std::size_t>(n)]) off[static_cast<std::size_t>(n)].push_back(grid(n, g));
    const auto [ch, p] = channels_at_offsets(s, off);
    ++res.evaluations;
    const FixedSolve f = beamform_fixed(effective_channel(ch, p), s.sinr_min, s.noise_power);
    return f.feasible ? f.power : std::numeric_limits<double>::infinity();
  };
  double best = evaluate(idx);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    bool moved = false;
    for (int n = 0; n < N; ++n) {
      for (std::size_t j = 0; j < idx[static_cast<std::size_t>(n)].size(); ++j) {
        int& slot = idx[static_cast<std::size_t>(n)][j];
        const int keep = slot;
        int arg = keep;
        for (int g = 0; g < grid_points; ++g) {
          if (g == keep) continue;
          slot = g;
          const double v = evaluate(idx);
          if (v < best) {
            best = v;
            arg = g;
          }
        }
        slot = arg;
        moved = moved || arg != keep;
      }
    }
    if (!moved) break;
  }
  res.feasible = std::isfinite(best);
  res.power = best;
  res.offsets.assign(static_cast<std::size_t>(N), {});
  for (int n = 0; n < N; ++n)
    for (int g : idx[static_cast<std::size_t>(n)]) res.offsets[static_cast<std::size_t>(n)].push_back(grid(n, g));
  return res;
}

struct ExhaustiveResult {
  bool feasible = false;
  ActivationPattern pattern;
  double power = std::numeric_limits<double>::infinity();
  long evaluated = 0;
};

inline constexpr int kExhaustiveMaxAntennas = 14;

/// Minimum over every pattern with all waveguides nonempty: closed form for one
/// user, fixed-activation SOCP otherwise.
inline ExhaustiveResult exhaustive_oracle(const ChannelSet& channels, double sinr_min, double noise_power) {
  const int L = channels.antennas_per_waveguide;
  const int N = channels.num_waveguides;
  const int M = L * N;
  if (M > kExhaustiveMaxAntennas)
    throw std::invalid_argument("exhaustive_oracle: more than " + std::to_string(kExhaustiveMaxAntennas) +
                                " antennas");
  const bool single = channels.num_users() == 1;
  ExhaustiveResult r;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << M); ++mask) {
    const ActivationPattern p = ActivationPattern::from_mask(L, N, mask);
    if (!is_valid_matching(p)) continue;
    ++r.evaluated;
    double v;
    if (single) {
      v = closed_form_power(channels, p, sinr_min, noise_power);
    } else {
      const FixedSolve f = solve_fixed_activation(channels, p, sinr_min, noise_power);
      v = f.feasible ? f.power : std::numeric_limits<double>::infinity();
    }
    if (v < r.power) {
      r.power = v;
      r.pattern = p;
      r.feasible = true;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Experiments

/// Applies one named setting. Changing N or a span rebuilds the default layout.
inline void apply_setting(Scenario& s, const std::string& key, double v) {
  auto as_int = [&](const std::string& what) {
    if (v != std::floor(v) || v < 1.0) throw std::invalid_argument(what + " must be a positive integer");
    return static_cast<int>(v);
  };
  if (key == "num_waveguides" || key == "N") s.num_waveguides = as_int(key);
  else if (key == "num_users" || key == "K") s.num_users = as_int(key);
  else if (key == "antennas_per_waveguide" || key == "L") s.antennas_per_waveguide = as_int(key);
  else if (key == "span_x") s.span_x = v;
  else if (key == "span_y") s.span_y = v;
  else if (key == "height") s.height = v;
  else if (key == "carrier_freq") s.carrier_freq = v;
  else if (key == "effective_index") s.effective_index = v;
  else if (key == "noise_dbm") s.noise_power = dbm_to_watts(v);
  else if (key == "noise_power") s.noise_power = v;
  else if (key == "sinr_db") s.sinr_min = db_to_linear(v);
  else if (key == "sinr_min") s.sinr_min = v;
  else if (key == "power_budget") s.power_budget = v;
  else throw std::invalid_argument("unknown scenario key: " + key);
  s.waveguides = default_layout(s.num_waveguides, s.span_x, s.span_y);
}

struct SolverSettings {
  double epsilon = 0.0;  // 0 selects each solver's default
  CountMode count_mode = CountMode::PerWaveguideSearch;
  double time_limit = 0.0;
  long max_iterations = 0;
  int grid_points = 50;
  int grid_sweeps = 3;
  int max_rounds = 50;
  double margin = 1e-9;
};

inline const std::vector<std::string>& known_solvers() {
  static const std::vector<std::string> v{"bnb-su",   "bnb-su-equal", "bnb-mu",          "matching",
                                          "vanilla",  "baseline-mimo", "continuous-grid", "exhaustive"};
  return v;
}

struct ExperimentSpec {
  Scenario base;
  std::string sweep_key = "none";
  std::vector<double> sweep_values;
  std::vector<std::string> solvers{"matching"};
  int trials = 1;
  std::uint64_t seed = 1;
  bool random_users = true;
  SolverSettings settings;
  int threads = 1;
};

struct ResultRecord {
  std::string sweep_key;
  double sweep_value = 0.0;
  int trial = 0;
  std::string solver;
  std::string status = "ok";
  double power_w = std::numeric_limits<double>::infinity();
  double power_dbm = std::numeric_limits<double>::infinity();
  long iterations = 0;
  double gap = std::numeric_limits<double>::quiet_NaN();
  double wall_time = 0.0;  // seconds; kept out of results.csv
  std::string pattern;
};

/// Scenario of one (sweep point, trial) pair. Users depend only on (seed, trial).
inline Scenario trial_scenario(const ExperimentSpec& spec, double sweep_value, int trial) {
  Scenario s = spec.base;
  if (spec.sweep_key != "none") apply_setting(s, spec.sweep_key, sweep_value);
  if (spec.random_users) {
    TrialStream ts(spec.seed, static_cast<std::uint64_t>(trial));
    s.user_positions = random_users(s.num_users, s.span_x, s.span_y, ts);
  }
  s.validate();
  return s;
}

inline ResultRecord run_solver(const std::string& solver, const Scenario& s, const SolverSettings& set) {
  ResultRecord r;
  r.solver = solver;
  const auto t0 = std::chrono::steady_clock::now();
  auto finish = [&](bool feasible, double power) {
    if (!feasible) r.status = "infeasible";
    r.power_w = feasible ? power : std::numeric_limits<double>::infinity();
    r.power_dbm = feasible ? watts_to_dbm(power) : std::numeric_limits<double>::infinity();
  };
  try {
    const ChannelSet ch = build_channels(s);
    if (solver == "bnb-su" || solver == "bnb-su-equal") {
      if (s.num_users != 1) throw std::invalid_argument("bnb-su needs exactly one user");
      SingleUserOptions o;
      o.epsilon = set.epsilon;
      o.mode = solver == "bnb-su-equal" ? CountMode::EqualCounts : set.count_mode;
      const SingleUserResult res = bnb_single_user(ch, s.sinr_min, s.noise_power, o);
      finish(res.feasible, res.power);
      r.iterations = res.iterations;
      r.gap = res.gap;
      r.pattern = res.pattern.to_string();
    } else if (solver == "bnb-mu") {
      MultiUserOptions o;
      o.epsilon = set.epsilon;
      o.p0 = s.power_budget;
      if (o.p0 <= 0.0) {
        const FixedSolve b = baseline_mimo(s);
        if (b.feasible) o.baseline_power = b.power;
      }
      o.time_limit = set.time_limit;
      o.max_iterations = set.max_iterations;
      const MultiUserResult res = bnb_multi_user(ch, s.sinr_min, s.noise_power, o);
      finish(res.feasible, res.power);
      if (res.feasible && !res.certified) r.status = "uncertified:" + res.stop_reason;
      r.iterations = res.iterations;
      r.gap = res.gap;
      r.pattern = res.pattern.to_string();
    } else if (solver == "matching" || solver == "vanilla") {
      MatchingOptions o;
      o.margin = set.margin;
      o.max_rounds = set.max_rounds;
      o.individual = solver == "vanilla";
      const MatchingResult res = welfare_matching(ch, s.sinr_min, s.noise_power, o);
      finish(res.state.feasible, res.power);
      r.iterations = static_cast<long>(res.accepted_powers.size()) - 1;
      r.pattern = res.state.pattern.to_string();
    } else if (solver == "baseline-mimo") {
      const FixedSolve f = baseline_mimo(s);
      finish(f.feasible, f.power);
      r.iterations = f.iterations;
    } else if (solver == "continuous-grid") {
      // Start from the matching solution: same per-waveguide counts and positions.
      const MatchingResult m = welfare_matching(ch, s.sinr_min, s.noise_power);
      std::vector<int> counts;
      std::vector<std::vector<double>> init(static_cast<std::size_t>(s.num_waveguides));
      for (int n = 0; n < s.num_waveguides; ++n) {
        counts.push_back(m.state.pattern.count(n));
        const double span = s.span_of(s.waveguides[static_cast<std::size_t>(n)]);
        for (int l = 0; l < s.antennas_per_waveguide; ++l)
          if (m.state.pattern.at(l, n))
            init[static_cast<std::size_t>(n)].push_back(grid_offset(span, l, s.antennas_per_waveguide));
      }
      const ContinuousResult c = continuous_grid_search(s, counts, set.grid_points, set.grid_sweeps, &init);
      finish(c.feasible, c.power);
      r.iterations = c.evaluations;
    } else if (solver == "exhaustive") {
      const ExhaustiveResult e = exhaustive_oracle(ch, s.sinr_min, s.noise_power);
      finish(e.feasible, e.power);
      r.iterations = e.evaluated;
      r.pattern = e.pattern.to_string();
    } else {
      throw std::invalid_argument("unknown solver: " + solver);
    }
  } catch (const std::exception& e) {
    r.status = std::string("error:") + e.what();
    r.power_w = r.power_dbm = std::numeric_limits<double>::infinity();
  }
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// Concurrency cap from PASS_OPT_THREADS (unset or invalid: 1).
inline int thread_cap_from_env() {
  const char* v = std::getenv("PASS_OPT_THREADS");
  if (!v) return 1;
  try {
    const int n = std::stoi(v);
    return n >= 1 ? n : 1;
  } catch (...) {
    return 1;
  }
}

/// Records ordered by (sweep value, trial, solver) regardless of thread count.
inline std::vector<ResultRecord> run_experiment(const ExperimentSpec& spec) {
  for (const auto& sv : spec.solvers)
    if (std::find(known_solvers().begin(), known_solvers().end(), sv) == known_solvers().end())
      throw std::invalid_argument("unknown solver: " + sv);
  if (spec.trials < 0) throw std::invalid_argument("trials must be >= 0");
  const std::size_t per_point = static_cast<std::size_t>(spec.trials) * spec.solvers.size();
  std::vector<ResultRecord> out(spec.sweep_values.size() * per_point);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next++; job < out.size(); job = next++) {
      const std::size_t point = job / per_point;
      const std::size_t rest = job % per_point;
      const int trial = static_cast<int>(rest / spec.solvers.size());
      const std::string& solver = spec.solvers[rest % spec.solvers.size()];
      const double value = spec.sweep_values[point];
      ResultRecord r;
      try {
        r = run_solver(solver, trial_scenario(spec, value, trial), spec.settings);
      } catch (const std::exception& e) {
        r.solver = solver;
        r.status = std::string("error:") + e.what();
      }
      r.sweep_key = spec.sweep_key;
      r.sweep_value = value;
      r.trial = trial;
      out[job] = std::move(r);
    }
  };
  const int threads = std::max(1, std::min<int>(spec.threads, static_cast<int>(out.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return out;
}

struct SummaryRow {
  double sweep_value;
  std::string solver;
  int ok;
  int failed;
  double mean_dbm;
  double min_dbm;
  double max_dbm;
};

/// Per (sweep value, solver): mean/min/max dBm over successful trials.
inline std::vector<SummaryRow> summarize(const ExperimentSpec& spec, const std::vector<ResultRecord>& recs) {
  std::vector<SummaryRow> rows;
  for (double v : spec.sweep_values) {
    for (const auto& solver : spec.solvers) {
      SummaryRow row{v, solver, 0, 0, 0.0, std::numeric_limits<double>::infinity(),
                     -std::numeric_limits<double>::infinity()};
      for (const auto& r : recs) {
        if (r.sweep_value != v || r.solver != solver) continue;
        if (std::isfinite(r.power_dbm)) {
          ++row.ok;
          row.mean_dbm += r.power_dbm;
          row.min_dbm = std::min(row.min_dbm, r.power_dbm);
          row.max_dbm = std::max(row.max_dbm, r.power_dbm);
        } else {
          ++row.failed;
        }
      }
      row.mean_dbm = row.ok ? row.mean_dbm / row.ok : std::numeric_limits<double>::quiet_NaN();
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace pass
