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

// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pass/bnb_multi.hpp"
#include "pass/bnb_single.hpp"
#include "pass/coupling.hpp"
#include "pass/harness.hpp"
#include "pass/io.hpp"
#include "pass/matching.hpp"
#include "pass/mccormick.hpp"

using namespace pass;

namespace {

int failures = 0;

void report(const std::string& id, bool ok, const std::string& detail) {
  std::printf("%s criterion %s: %s\n", ok ? "PASS" : "FAIL", id.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += ok ? 0 : 1;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

Scenario instance(int N, int K, int L, std::uint64_t seed, int trial) {
  Scenario s = paper_small_preset();
  s.num_waveguides = N;
  s.num_users = K;
  s.antennas_per_waveguide = L;
  s.waveguides = default_layout(N, s.span_x, s.span_y);
  TrialStream ts(seed, static_cast<std::uint64_t>(trial));
  s.user_positions = random_users(K, s.span_x, s.span_y, ts);
  return s;
}

void equal_power_spacing() {
  const coupling::CouplingParams p{0.33, 0.24615, 5.0};
  const std::vector<bool> active(6, true);
  const double expect[6] = {5.554, 5.157, 4.633, 4.006, 3.016, 0.200};
  const int reps = 1000;
  const auto t0 = std::chrono::steady_clock::now();
  coupling::SpacingPlan plan;
  for (int i = 0; i < reps; ++i) plan = coupling::equal_power_spacings(active, p);
  const double per_call = seconds_since(t0) / reps;
  std::string got;
  double worst = 0.0;
  for (int l = 0; l < 6; ++l) {
    worst = std::max(worst, std::abs(plan.spacing[static_cast<std::size_t>(l)] - expect[l]));
    got += fmt("%s%.4f", l ? "," : "", plan.spacing[static_cast<std::size_t>(l)]);
  }
  report("1", worst <= 0.001 && per_call < 1e-3,
         fmt("spacings {%s} mm, max deviation %.4f mm (tol 0.001), %.2g s per plan", got.c_str(), worst,
             per_call));
}

void minimum_spacing() {
  const coupling::CouplingParams p{0.33, 0.24615, 5.0};
  const double s = p.min_spacing();
  const double residual = std::abs(std::sin(coupling::coupling_coefficient(s, p) * p.d_pa) - 1.0);
  report("2", std::abs(s - 0.1999) <= 0.0005 && residual < 1e-12,
         fmt("S_min = %.5f mm, |sin - 1| = %.1e", s, residual));
}

void radiation_ratio_exactness() {
  const coupling::CouplingParams p{0.33, 0.24615, 5.0};
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  long patterns = 0;
  for (int L = 1; L <= 8; ++L) {
    for (unsigned mask = 1; mask < (1u << L); ++mask) {
      std::vector<bool> active(static_cast<std::size_t>(L));
      int ls = 0;
      for (int l = 0; l < L; ++l) ls += (active[static_cast<std::size_t>(l)] = (mask >> l) & 1u) ? 1 : 0;
      const auto plan = coupling::equal_power_spacings(active, p);
      const auto beta = coupling::radiation_ratios(active, plan.spacing, p);
      for (int l = 0; l < L; ++l)
        if (active[static_cast<std::size_t>(l)])
          worst = std::max(worst, std::abs(beta[static_cast<std::size_t>(l)] - 1.0 / std::sqrt(ls)));
      ++patterns;
    }
  }
  const double t = seconds_since(t0);
  report("3", worst < 1e-9 && t < 1.0,
         fmt("%ld patterns, max |beta - 1/sqrt(Ls)| = %.2e, %.3f s", patterns, worst, t));
}

void single_user_optimality() {
  const auto t0 = std::chrono::steady_clock::now();
  int matched = 0;
  long max_nodes = 0;
  const long node_cap = 1L << 13;
  bool nodes_ok = true;
  for (int trial = 0; trial < 50; ++trial) {
    const Scenario s = instance(2, 1, 6, 4, trial);
    const ChannelSet ch = build_channels(s);
    const SingleUserResult r = bnb_single_user(ch, s.sinr_min, s.noise_power);
    const ExhaustiveResult ex = exhaustive_oracle(ch, s.sinr_min, s.noise_power);
    if (r.feasible && std::abs(r.power - ex.power) <= r.epsilon) ++matched;
    max_nodes = std::max(max_nodes, r.nodes);
    nodes_ok = nodes_ok && r.nodes <= node_cap;
  }
  const double t = seconds_since(t0);
  report("4", matched == 50 && nodes_ok && t < 300.0,
         fmt("%d/50 within eps of exhaustive, max nodes %ld (cap %ld), %.1f s", matched, max_nodes, node_cap,
             t));
}

struct MuInstance {
  Scenario s;
  ChannelSet ch;
  MultiUserResult bnb;
};

std::vector<MuInstance> multi_user_instances;
bool certificate_checks = true;
long certificate_runs = 0;

void track_certificate(const MultiUserResult& r) {
  ++certificate_runs;
  certificate_checks = certificate_checks && r.edge_check_holds && r.gap_bound_holds;
}

void multi_user_optimality() {
  const auto t0 = std::chrono::steady_clock::now();
  int matched = 0;
  int certified = 0;
  bool monotone = true;
  double worst_gap_over_eps = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    MuInstance in;
    in.s = instance(2, 2, 3, 21, trial);
    in.ch = build_channels(in.s);
    in.bnb = bnb_multi_user(in.ch, in.s.sinr_min, in.s.noise_power);
    track_certificate(in.bnb);
    // Oracle over the same feasible set: every nonzero activation pattern.
    double oracle = std::numeric_limits<double>::infinity();
    for (std::uint64_t mask = 1; mask < 64; ++mask) {
      const FixedSolve f =
          solve_fixed_activation(in.ch, ActivationPattern::from_mask(3, 2, mask), in.s.sinr_min, in.s.noise_power);
      if (f.feasible) oracle = std::min(oracle, f.power);
    }
    const auto& r = in.bnb;
    if (r.feasible && std::abs(r.power - oracle) <= r.epsilon) ++matched;
    if (r.gap <= r.epsilon) ++certified;
    worst_gap_over_eps = std::max(worst_gap_over_eps, r.gap / r.epsilon);
    for (std::size_t i = 1; i < r.trace.size(); ++i)
      monotone = monotone && r.trace[i].gub <= r.trace[i - 1].gub && r.trace[i].glb >= r.trace[i - 1].glb;
    multi_user_instances.push_back(std::move(in));
  }
  const double t = seconds_since(t0);
  report("5", matched == 20 && certified == 20 && monotone && t < 1200.0,
         fmt("%d/20 within eps of oracle, %d/20 with gap <= eps (max gap/eps %.3g), traces monotone: %s, %.1f s",
             matched, certified, worst_gap_over_eps, monotone ? "yes" : "no", t));
}

void large_multi_user_instance() {
  const Scenario s = instance(4, 4, 6, 5, 0);
  const ChannelSet ch = build_channels(s);
  MultiUserOptions opt;
  opt.time_limit = 300.0;
  const auto t0 = std::chrono::steady_clock::now();
  const MultiUserResult r = bnb_multi_user(ch, s.sinr_min, s.noise_power, opt);
  track_certificate(r);
  const double t = seconds_since(t0);
  report("5b", r.feasible && r.gap <= r.epsilon,
         fmt("N=K=4, L=6: stop '%s' after %ld iterations, %.1f s, power %.4g W, gap %.3g W vs eps %.3g W "
             "(T_max 10^%.1f)",
             r.stop_reason.c_str(), r.iterations, t, r.power, r.gap, r.epsilon, r.cert.log10_t_max));
}

void termination_certificate() {
  report("6", certificate_checks && certificate_runs > 0,
         fmt("%ld multi-user runs; edge <= xi implies gap <= eps and gap <= sqrt(2 M P0 B) * edge on every "
             "iteration: %s",
             certificate_runs, certificate_checks ? "yes" : "no"));
}

void kkt_socp_agreement() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> kd(1, 4);
  int agree = 0;
  int exact_sinr = 0;
  double worst_rel = 0.0;
  double worst_sinr = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int K = kd(rng);
    const int N = K + std::uniform_int_distribution<int>(0, 2)(rng);
    Eigen::MatrixXcd H(N, K);
    for (int r = 0; r < N; ++r)
      for (int c = 0; c < K; ++c) H(r, c) = std::complex<double>(g(rng), g(rng)) * 1e-4;
    const double gamma = db_to_linear(std::uniform_real_distribution<double>(5.0, 25.0)(rng));
    const double noise = 1e-11;
    const KktResult k = kkt_beamformer(H, gamma, noise);
    const FixedSolve s = solve_fixed_channel(H, gamma, noise);
    if (!k.converged || !s.feasible) continue;
    const double rel = std::abs(k.power - s.power) / s.power;
    worst_rel = std::max(worst_rel, rel);
    agree += rel <= 1e-6 ? 1 : 0;
    const Eigen::VectorXd sinr = sinr_of(k.W, H, noise);
    const double dev = ((sinr.array() - gamma).abs() / gamma).maxCoeff();
    worst_sinr = std::max(worst_sinr, dev);
    exact_sinr += dev <= 1e-6 ? 1 : 0;
  }
  report("7", agree == 100 && exact_sinr == 100,
         fmt("%d/100 powers within 1e-6 relative (worst %.2e), %d/100 SINRs at target (worst %.2e)", agree,
             worst_rel, exact_sinr, worst_sinr));
}

void matching_quality() {
  int ok = 0;
  double sum_excess = 0.0;
  double max_excess = 0.0;
  int max_rounds = 0;
  for (const auto& in : multi_user_instances) {
    const MatchingResult m = welfare_matching(in.ch, in.s.sinr_min, in.s.noise_power);
    bool decreasing = true;
    for (std::size_t i = 1; i < m.accepted_powers.size(); ++i)
      decreasing = decreasing && m.accepted_powers[i] < m.accepted_powers[i - 1];
    const bool stable = verify_pairwise_stable(in.ch, in.s.sinr_min, in.s.noise_power, m.state);
    const double excess = (m.power - in.bnb.power) / in.bnb.power;
    sum_excess += excess;
    max_excess = std::max(max_excess, excess);
    max_rounds = std::max(max_rounds, m.rounds);
    if (m.converged && m.rounds <= 50 && decreasing && stable && m.power >= in.bnb.power - in.bnb.epsilon) ++ok;
  }
  const double n = static_cast<double>(multi_user_instances.size());
  const double mean = sum_excess / n;
  report("8", ok == static_cast<int>(n) && mean <= 0.25,
         fmt("%d/%d stable, strictly decreasing, above BnB; max rounds %d; mean excess %.1f%% (guard 25%%), "
             "worst %.1f%%",
             ok, static_cast<int>(n), max_rounds, 100.0 * mean, 100.0 * max_excess));
}

/// Mean dBm per (sweep value, solver) across trials.
std::map<std::string, std::vector<double>> mean_curves(const ExperimentSpec& spec) {
  const auto rows = summarize(spec, run_experiment(spec));
  std::map<std::string, std::vector<double>> out;
  for (const auto& r : rows) out[r.solver].push_back(r.failed ? std::numeric_limits<double>::quiet_NaN() : r.mean_dbm);
  return out;
}

std::string curve_text(const std::vector<double>& c) {
  std::string s;
  for (std::size_t i = 0; i < c.size(); ++i) s += fmt("%s%.2f", i ? "," : "", c[i]);
  return s;
}

void trends() {
  ExperimentSpec spec;
  spec.base = paper_small_preset();
  spec.seed = 11;
  spec.trials = 10;
  spec.threads = thread_cap_from_env();

  spec.sweep_key = "sinr_db";
  spec.sweep_values = {10, 15, 20, 25};
  spec.solvers = {"matching", "vanilla", "baseline-mimo"};
  {
    bool ok = true;
    std::string detail;
    for (const auto& [solver, c] : mean_curves(spec)) {
      for (std::size_t i = 1; i < c.size(); ++i) ok = ok && c[i] > c[i - 1];
      detail += solver + " {" + curve_text(c) + "} ";
    }
    report("9a", ok, "mean dBm over sinr 10..25 dB: " + detail);
  }

  spec.sweep_key = "L";
  spec.sweep_values = {4, 6, 8, 10};
  spec.solvers = {"matching"};
  {
    const auto c = mean_curves(spec)["matching"];
    bool ok = true;
    for (std::size_t i = 1; i < c.size(); ++i) ok = ok && c[i] <= c[i - 1];
    report("9b", ok, "matching mean dBm over L 4..10: {" + curve_text(c) + "}");
  }

  {
    ExperimentSpec paired = spec;
    paired.sweep_key = "none";
    paired.sweep_values = {0};
    paired.trials = 100;
    paired.solvers = {"matching", "baseline-mimo"};
    const auto recs = run_experiment(paired);
    int wins = 0;
    for (std::size_t i = 0; i + 1 < recs.size(); i += 2)
      wins += recs[i].status == "ok" && recs[i].power_w <= recs[i + 1].power_w ? 1 : 0;
    report("9c", wins >= 95, fmt("matching <= baseline on %d/100 paired instances", wins));
  }

  spec.sweep_key = "span_x";
  spec.sweep_values = {5, 10, 15};
  spec.solvers = {"matching", "baseline-mimo"};
  {
    auto curves = mean_curves(spec);
    const auto& pass = curves["matching"];
    const auto& base = curves["baseline-mimo"];
    const double slope_pass = (pass.back() - pass.front()) / 10.0;
    const double slope_base = (base.back() - base.front()) / 10.0;
    report("9d", slope_base > slope_pass,
           fmt("dB per metre of S_x: baseline %.3f, matching %.3f (baseline {%s}, matching {%s})", slope_base,
               slope_pass, curve_text(base).c_str(), curve_text(pass).c_str()));
  }
}

void mccormick_soundness() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::uniform_real_distribution<double> t(0.0, 1.0);
  long violations = 0;
  long samples = 0;
  for (int b = 0; b < 1000; ++b) {
    double a = u(rng), c = u(rng), d = u(rng), e = u(rng);
    const Interval x{std::min(a, c), std::max(a, c)};
    const Interval y{std::min(d, e), std::max(d, e)};
    const EnvelopeRows env = mccormick(x, y);
    for (int i = 0; i < 100; ++i) {
      const double xv = x.lo + t(rng) * x.width();
      const double yv = y.lo + t(rng) * y.width();
      ++samples;
      if (!env.contains(xv, yv, xv * yv, 1e-12 * (1.0 + std::abs(xv * yv)))) ++violations;
    }
  }
  double worst_point = 0.0;
  for (int b = 0; b < 1000; ++b) {
    const double xv = u(rng), yv = u(rng);
    const auto [lo, hi] = mccormick({xv, xv}, {yv, yv}).z_range(xv, yv);
    worst_point = std::max({worst_point, std::abs(lo - xv * yv), std::abs(hi - xv * yv)});
  }
  report("10", violations == 0 && worst_point <= 1e-12,
         fmt("%ld samples in 1000 boxes, %ld outside the envelope; point-box z range width %.1e", samples,
             violations, worst_point));
}

void determinism() {
  ExperimentSpec spec;
  spec.base = paper_small_preset();
  spec.base.antennas_per_waveguide = 4;
  spec.sweep_key = "sinr_db";
  spec.sweep_values = {15, 20};
  spec.solvers = {"matching", "baseline-mimo", "bnb-mu"};
  spec.trials = 3;
  spec.seed = 42;
  std::ostringstream a, b;
  io::write_results(a, run_experiment(spec));
  spec.threads = std::max(2, thread_cap_from_env());
  io::write_results(b, run_experiment(spec));
  report("11", a.str() == b.str() && !a.str().empty(),
         fmt("two runs with seed 42 (%zu bytes): %s", a.str().size(), a.str() == b.str() ? "identical" : "differ"));
}

}  // namespace

int main() {
  equal_power_spacing();
  minimum_spacing();
  radiation_ratio_exactness();
  single_user_optimality();
  multi_user_optimality();
  large_multi_user_instance();
  termination_certificate();
  kkt_socp_agreement();
  matching_quality();
  trends();
  mccormick_soundness();
  determinism();
  std::printf("%d criterion line(s) failed\n", failures);
  return failures;
}
