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

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pass/bnb_multi.hpp"
#include "pass/bnb_single.hpp"
#include "pass/config.hpp"
#include "pass/coupling.hpp"
#include "pass/harness.hpp"
#include "pass/io.hpp"
#include "pass/matching.hpp"

namespace fs = std::filesystem;
using namespace pass;

namespace {

struct Outputs {
  std::ofstream results, trace, summary;

  explicit Outputs(const fs::path& dir) {
    fs::create_directories(dir);
    results.open(dir / "results.csv");
    trace.open(dir / "trace.csv");
    summary.open(dir / "summary.txt");
    if (!results || !trace || !summary) throw std::runtime_error("cannot write to " + dir.string());
  }
};

struct Job {
  double value;
  int trial;
  Scenario scenario;
};

std::vector<Job> jobs_of(const ExperimentSpec& spec) {
  std::vector<Job> out;
  for (double v : spec.sweep_values)
    for (int t = 0; t < spec.trials; ++t) out.push_back({v, t, trial_scenario(spec, v, t)});
  return out;
}

ResultRecord base_record(const ExperimentSpec& spec, const Job& j, const std::string& solver) {
  ResultRecord r;
  r.sweep_key = spec.sweep_key;
  r.sweep_value = j.value;
  r.trial = j.trial;
  r.solver = solver;
  return r;
}

void set_power(ResultRecord& r, bool feasible, double p) {
  if (!feasible) {
    r.status = "infeasible";
    return;
  }
  r.power_w = p;
  r.power_dbm = watts_to_dbm(p);
}

std::string prefix(const Job& j) { return io::num(j.value) + "," + std::to_string(j.trial) + ","; }

/// Prepends "sweep_value,trial," to every line of a CSV block; the header once.
void append_trace(std::ostream& os, const std::string& block, const std::string& pre, bool& header_done) {
  std::istringstream is(block);
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (first) {
      first = false;
      if (!header_done) os << "sweep_value,trial," << line << '\n';
      header_done = true;
      continue;
    }
    os << pre << line << '\n';
  }
}

int su_solve(const config::Config& cfg, Outputs& out) {
  const ExperimentSpec& spec = cfg.experiment;
  std::vector<ResultRecord> recs;
  bool header = false;
  for (const Job& j : jobs_of(spec)) {
    ResultRecord r = base_record(spec, j, "bnb-su");
    try {
      if (j.scenario.num_users != 1) throw std::invalid_argument("su-solve needs num_users = 1");
      SingleUserOptions o;
      o.epsilon = spec.settings.epsilon;
      o.mode = spec.settings.count_mode;
      const auto t0 = std::chrono::steady_clock::now();
      const SingleUserResult res = bnb_single_user(build_channels(j.scenario), j.scenario.sinr_min,
                                                   j.scenario.noise_power, o);
      r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      set_power(r, res.feasible, res.power);
      r.iterations = res.iterations;
      r.gap = res.gap;
      r.pattern = res.pattern.to_string();
      std::ostringstream t;
      io::write_su_trace(t, res.trace);
      append_trace(out.trace, t.str(), prefix(j), header);
      out.summary << "point " << io::num(j.value) << " trial " << j.trial << ": power_w " << io::num(res.power)
                  << " power_dbm " << io::num(r.power_dbm) << " pattern " << r.pattern << " gap_w "
                  << io::num(res.gap) << " epsilon_w " << io::num(res.epsilon) << " nodes " << res.nodes
                  << " runs " << res.runs << " solver_failures " << res.solver_failures << '\n';
    } catch (const std::exception& e) {
      r.status = std::string("error:") + e.what();
    }
    recs.push_back(r);
  }
  io::write_results(out.results, recs);
  return 0;
}

int mu_solve(const config::Config& cfg, Outputs& out, const fs::path& dir) {
  const ExperimentSpec& spec = cfg.experiment;
  std::vector<ResultRecord> recs;
  bool header = false;
  std::ofstream weights(dir / "weights.csv");
  bool wheader = false;
  for (const Job& j : jobs_of(spec)) {
    ResultRecord r = base_record(spec, j, "bnb-mu");
    try {
      const Scenario& s = j.scenario;
      MultiUserOptions o;
      o.epsilon = spec.settings.epsilon;
      o.p0 = s.power_budget;
      if (o.p0 <= 0.0) {
        const FixedSolve b = baseline_mimo(s);
        if (b.feasible) o.baseline_power = b.power;
      }
      o.time_limit = spec.settings.time_limit;
      o.max_iterations = spec.settings.max_iterations;
      const MultiUserResult res = bnb_multi_user(build_channels(s), s.sinr_min, s.noise_power, o);
      set_power(r, res.feasible, res.power);
      if (res.feasible && !res.certified) r.status = "uncertified:" + res.stop_reason;
      r.iterations = res.iterations;
      r.gap = res.gap;
      r.pattern = res.pattern.to_string();
      std::ostringstream t;
      io::write_mu_trace(t, res.trace);
      append_trace(out.trace, t.str(), prefix(j), header);
      if (res.feasible) {
        std::ostringstream w;
        io::write_weights(w, res.W);
        append_trace(weights, w.str(), prefix(j), wheader);
      }
      out.summary << "point " << io::num(j.value) << " trial " << j.trial << ": power_w " << io::num(res.power)
                  << " power_dbm " << io::num(r.power_dbm) << " pattern " << r.pattern << " glb_w "
                  << io::num(res.glb) << " gap_w " << io::num(res.gap) << " epsilon_w " << io::num(res.epsilon)
                  << " certified " << (res.certified ? "yes" : "no") << " stop " << res.stop_reason
                  << " iterations " << res.iterations << " nodes " << res.nodes << " p0_w " << io::num(res.p0)
                  << " xi " << io::num(res.cert.xi) << " log10_t_max " << io::num(res.cert.log10_t_max)
                  << " edge_check " << (res.edge_check_holds ? "ok" : "violated") << " gap_bound_check "
                  << (res.gap_bound_holds ? "ok" : "violated") << '\n';
    } catch (const std::exception& e) {
      r.status = std::string("error:") + e.what();
    }
    recs.push_back(r);
  }
  io::write_results(out.results, recs);
  return 0;
}

int match_solve(const config::Config& cfg, Outputs& out) {
  const ExperimentSpec& spec = cfg.experiment;
  std::vector<ResultRecord> recs;
  bool header = false;
  for (const Job& j : jobs_of(spec)) {
    ResultRecord r = base_record(spec, j, "matching");
    try {
      const Scenario& s = j.scenario;
      const ChannelSet ch = build_channels(s);
      MatchingOptions o;
      o.margin = spec.settings.margin;
      o.max_rounds = spec.settings.max_rounds;
      const MatchingResult m = welfare_matching(ch, s.sinr_min, s.noise_power, o);
      set_power(r, m.state.feasible, m.power);
      r.iterations = static_cast<long>(m.accepted_powers.size()) - 1;
      r.pattern = m.state.pattern.to_string();
      std::ostringstream t;
      io::write_matching_trace(t, m);
      append_trace(out.trace, t.str(), prefix(j), header);
      const bool stable = verify_pairwise_stable(ch, s.sinr_min, s.noise_power, m.state, o.margin);
      out.summary << "point " << io::num(j.value) << " trial " << j.trial << ": power_w " << io::num(m.power)
                  << " power_dbm " << io::num(r.power_dbm) << " pattern " << r.pattern << " rounds " << m.rounds
                  << " accepted_swaps " << r.iterations << " converged " << (m.converged ? "yes" : "no")
                  << " pairwise_stable " << (stable ? "yes" : "no") << '\n';
    } catch (const std::exception& e) {
      r.status = std::string("error:") + e.what();
    }
    recs.push_back(r);
  }
  io::write_results(out.results, recs);
  return 0;
}

int run_batch(config::Config cfg, Outputs& out, const std::vector<std::string>& solvers) {
  ExperimentSpec& spec = cfg.experiment;
  if (!solvers.empty()) spec.solvers = solvers;
  spec.threads = thread_cap_from_env();
  const auto recs = run_experiment(spec);
  io::write_results(out.results, recs);
  out.trace << "sweep_value,trial,solver,wall_time_s\n";
  for (const auto& r : recs)
    out.trace << io::num(r.sweep_value) << ',' << r.trial << ',' << r.solver << ',' << io::num(r.wall_time) << '\n';
  out.summary << "solvers";
  for (const auto& s : spec.solvers) out.summary << ' ' << s;
  out.summary << "\ntrials " << spec.trials << " seed " << spec.seed << " threads " << spec.threads << '\n';
  io::write_summary_rows(out.summary, spec.sweep_key, summarize(spec, recs));
  return 0;
}

std::vector<std::vector<bool>> parse_active(const std::string& text) {
  std::vector<std::vector<bool>> out;
  for (const auto& part : config::split(text, '|')) {
    std::vector<bool> a;
    for (char c : part) {
      if (c == '1') a.push_back(true);
      else if (c == '0') a.push_back(false);
      else throw std::invalid_argument("coupling.active: expected 0/1 characters");
    }
    out.push_back(a);
  }
  return out;
}

int spacing_plan(const config::Config& cfg, Outputs& out) {
  const auto& c = cfg.coupling;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<coupling::SpacingPlan> plans;
  const auto actives = parse_active(c.active);
  for (const auto& a : actives) {
    if (!c.targets.empty()) {
      if (actives.size() != 1) throw std::invalid_argument("coupling.targets needs a single waveguide");
      if (c.targets.size() != a.size()) throw std::invalid_argument("coupling.targets length differs from active");
      plans.push_back(coupling::spacing_for_targets(c.targets, a, c.params));
    } else {
      plans.push_back(coupling::equal_power_spacings(a, c.params));
    }
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  io::write_spacing_plan(out.results, plans);
  out.trace << "waveguide,antenna,prior_active,kappa_per_mm\n";
  for (std::size_t n = 0; n < plans.size(); ++n)
    for (std::size_t l = 0; l < plans[n].active.size(); ++l)
      if (plans[n].active[l])
        out.trace << n << ',' << l << ',' << plans[n].prior_active[l] << ','
                  << io::num(coupling::coupling_coefficient(plans[n].spacing[l], c.params)) << '\n';
  out.summary << "omega0_per_mm " << io::num(c.params.omega0) << "\nalpha_per_mm " << io::num(c.params.alpha)
              << "\nd_pa_mm " << io::num(c.params.d_pa) << "\ns_min_mm " << io::num(c.params.min_spacing())
              << "\nmode " << (c.targets.empty() ? "equal-power" : "targets") << "\nsolve_seconds " << io::num(dt)
              << '\n';
  return 0;
}

int coupling_fit(const config::Config& cfg, Outputs& out) {
  const auto& c = cfg.coupling;
  std::vector<coupling::Sample> samples;
  std::string source;
  if (!c.samples.empty()) {
    std::ifstream is(c.samples);
    if (!is) throw std::runtime_error("cannot read " + c.samples);
    samples = io::read_samples(is);
    source = c.samples;
  } else {
    const auto cs = coupling::CrossSection::with_target_alpha(c.shape, c.half_width, c.n_eff, c.n_clad,
                                                              c.wavelength, c.target_alpha, c.index_contrast);
    const double lo = c.fit_min > 0.0 ? c.fit_min : 2.0 * c.half_width;
    const double hi = c.fit_max > 0.0 ? c.fit_max : lo + 20.0;
    if (c.fit_points < 2 || !(hi > lo)) throw std::invalid_argument("coupling fit window is empty");
    for (int i = 0; i < c.fit_points; ++i) {
      const double s = lo + (hi - lo) * i / (c.fit_points - 1);
      samples.push_back({s, c.shape == coupling::Shape::Rectangular ? coupling::oracle_kappa_rect(cs, s)
                                                                    : coupling::oracle_kappa_circ(cs, s)});
    }
    source = c.shape == coupling::Shape::Rectangular ? "rectangular oracle" : "circular oracle";
  }
  const coupling::CouplingParams fit = coupling::fit_exponential(samples, c.params.d_pa);
  out.results << "omega0_per_mm,alpha_per_mm,d_pa_mm,s_min_mm,samples,max_relative_residual\n"
              << io::num(fit.omega0) << ',' << io::num(fit.alpha) << ',' << io::num(fit.d_pa) << ','
              << (fit.omega0 * fit.d_pa >= kPi / 2.0 ? io::num(fit.min_spacing()) : std::string("nan")) << ','
              << samples.size() << ',' << io::num(coupling::max_relative_residual(samples, fit)) << '\n';
  io::write_samples(out.trace, samples, fit);
  out.summary << "source " << source << "\nomega0_per_mm " << io::num(fit.omega0) << "\nalpha_per_mm "
              << io::num(fit.alpha) << "\nmax_relative_residual "
              << io::num(coupling::max_relative_residual(samples, fit)) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pinching-antenna activation and beamforming optimizer"};
  std::string verb, config_path, sweep, out_dir = ".";
  std::uint64_t seed = 0;
  const std::vector<std::string> verbs{"su-solve",   "mu-solve",   "match-solve",  "baseline",
                                       "exhaustive", "experiment", "coupling-fit", "spacing-plan"};
  app.add_option("verb", verb, "What to run")->required()->check(CLI::IsMember(verbs));
  app.add_option("--config", config_path, "INI file with [scenario] [coupling] [solver] [experiment]");
  app.add_option("--sweep", sweep, "key=v1,v2,... overriding experiment.sweep");
  auto* seed_opt = app.add_option("--seed", seed, "Random seed for user placement");
  app.add_option("--out", out_dir, "Output directory");
  CLI11_PARSE(app, argc, argv);

  try {
    config::Config cfg;
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw std::runtime_error("cannot read " + config_path);
      cfg = config::parse(is);
    } else {
      cfg = config::parse_string("");
    }
    ExperimentSpec& spec = cfg.experiment;
    if (!sweep.empty()) {
      config::apply_sweep(spec, sweep);
      cfg.has_sweep = true;
    }
    if (!cfg.has_sweep) {
      spec.sweep_key = "none";
      spec.sweep_values = {0.0};
    }
    if (seed_opt->count() > 0) spec.seed = seed;

    Outputs out(out_dir);
    if (verb == "su-solve") return su_solve(cfg, out);
    if (verb == "mu-solve") return mu_solve(cfg, out, out_dir);
    if (verb == "match-solve") return match_solve(cfg, out);
    if (verb == "baseline") return run_batch(cfg, out, {"baseline-mimo"});
    if (verb == "exhaustive") return run_batch(cfg, out, {"exhaustive"});
    if (verb == "experiment") return run_batch(cfg, out, {});
    if (verb == "coupling-fit") return coupling_fit(cfg, out);
    if (verb == "spacing-plan") return spacing_plan(cfg, out);
  } catch (const std::exception& e) {
    std::cerr << "pass-opt: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
