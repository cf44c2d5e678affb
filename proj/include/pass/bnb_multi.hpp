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
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "pass/beamforming.hpp"
#include "pass/relaxations.hpp"

// Globally optimal multi-user design: branch-and-bound over (A, Re D, Im D) with
// the McCormick/SOC relaxation as bounding function and rounded activations
// followed by the fixed-activation SOCP as upper bound.

namespace pass {

struct Certificate {
  double xi = 0.0;             // edge threshold eps / sqrt(2 M P0 B)
  double log10_psi_vol = 0.0;  // (2 sqrt(P0))^{2NK}
  double log10_t_max = 0.0;
  double t_max = 0.0;          // +inf when it overflows a double
};

inline Certificate certificate(int M, int N, int K, double p0, double epsilon) {
  if (!(p0 > 0.0) || !(epsilon > 0.0) || M < 1 || N < 1 || K < 1)
    throw std::invalid_argument("certificate: parameters must be positive");
  const double B = M + 2.0 * N * K;
  const double dims = 2.0 * N * K;
  Certificate c;
  c.xi = epsilon / std::sqrt(2.0 * M * p0 * B);
  c.log10_psi_vol = dims * std::log10(2.0 * std::sqrt(p0));
  c.log10_t_max = c.log10_psi_vol - dims * std::log10(c.xi) + (B + 1.0) * std::log10(2.0);
  c.t_max = c.log10_t_max < 300.0 ? std::ceil(std::pow(10.0, c.log10_t_max) - 1.0)
                                  : std::numeric_limits<double>::infinity();
  return c;
}

struct MultiUserOptions {
  double epsilon = 0.0;         // watts; 0 selects 1e-6 * (all-active SOCP power)
  double p0 = 0.0;              // watts; 0 selects 100 * baseline_power (or the probe)
  double baseline_power = 0.0;  // conventional-MIMO power used to calibrate p0
  bool tighten_with_gub = true; // clamp continuous bounds to +-sqrt(GUB)
  double solver_tol = 1e-8;
  long max_iterations = 0;      // 0 = unlimited
  double time_limit = 0.0;      // seconds; 0 = unlimited
};

struct MultiUserTraceRow {
  long iteration;
  double gub;
  double glb;
  double max_edge;
  int open;
};

struct MultiUserResult {
  bool feasible = false;
  bool certified = false;  // GUB - GLB <= epsilon on exit
  std::string stop_reason;
  ActivationPattern pattern;
  Eigen::MatrixXcd W;
  double power = std::numeric_limits<double>::infinity();
  double glb = 0.0;
  double gap = std::numeric_limits<double>::infinity();
  double epsilon = 0.0;
  double p0 = 0.0;
  Certificate cert;
  long iterations = 0;
  long nodes = 0;
  int solver_failures = 0;
  bool edge_check_holds = true;      // small selected box implies gap <= epsilon
  bool gap_bound_holds = true;   // gap <= sqrt(2 M P0 B) * max edge, every iteration
  bool within_t_max = true;
  std::vector<MultiUserTraceRow> trace;
};

/// W_{n,:} = sqrt(L_n) D_{n,:}.
inline Eigen::MatrixXcd recover_weights(const ActivationPattern& pattern, const Eigen::MatrixXcd& D) {
  Eigen::MatrixXcd W = D;
  for (int n = 0; n < pattern.num_waveguides(); ++n) W.row(n) *= std::sqrt(static_cast<double>(pattern.count(n)));
  return W;
}

namespace detail {

struct MuNode {
  MixedBox box;
  double lb = 0.0;
  long id = 0;
};

struct MuBound {
  bool infeasible = false;
  bool solver_failed = false;
  double lb = 0.0;
  std::vector<double> relaxed_a;
  Eigen::MatrixXd row_power;  // N: relaxed sum_k |d_{n,k}|^2 (normalised)
};

inline MuBound bound_multi(const MixedBox& box, const Eigen::MatrixXcd& coeffs, int L, double gamma,
                           double noise, double tol) {
  MuBound b;
  const P2CProgram p = build_P2C(box, coeffs, L, gamma, noise);
  socp::SolveReport rep = socp::solve_conic(p.prog, tol);
  double used_tol = tol;
  if (rep.status == socp::Status::NumericalFailure) {
    used_tol = tol * 100.0;
    rep = socp::solve_conic(p.prog, used_tol);
  }
  if (rep.status == socp::Status::Infeasible) {
    b.infeasible = true;
    return b;
  }
  if (rep.status == socp::Status::Optimal) {
    b.lb = std::max(0.0, p.power_scale * rep.objective * (1.0 - 10.0 * used_tol));
  } else {
    b.solver_failed = true;
  }
  const int M = box.num_binary();
  b.relaxed_a.resize(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) b.relaxed_a[static_cast<std::size_t>(m)] = p.a[static_cast<std::size_t>(m)].eval(rep.x);
  const auto N = p.u.rows();
  b.row_power = Eigen::MatrixXd::Zero(N, 1);
  for (Eigen::Index n = 0; n < N; ++n)
    for (Eigen::Index k = 0; k < p.u.cols(); ++k)
      b.row_power(n) += std::pow(rep.x(p.u(n, k)), 2) + std::pow(rep.x(p.v(n, k)), 2);
  return b;
}

/// Rounds the relaxed activation respecting box fixings; a waveguide left empty
/// while carrying relaxed power gets its largest free relaxed entry.
inline ActivationPattern round_activation(const std::vector<double>& relaxed, const BinaryBox& box,
                                          const Eigen::MatrixXd& row_power, int L) {
  const int M = box.size();
  const int N = M / L;
  ActivationPattern p(L, N);
  for (int m = 0; m < M; ++m) {
    const auto um = static_cast<std::size_t>(m);
    p.set_flat(m, box.fixed(m) ? box.lo[um] != 0 : relaxed[um] >= 0.5);
  }
  for (int n = 0; n < N; ++n) {
    if (p.count(n) > 0 || !(row_power(n) > 1e-12)) continue;
    int best = -1;
    for (int l = 0; l < L; ++l) {
      const int m = n * L + l;
      if (box.fixed(m)) continue;
      if (best < 0 || relaxed[static_cast<std::size_t>(m)] > relaxed[static_cast<std::size_t>(best)]) best = m;
    }
    if (best >= 0) p.set_flat(best, true);
  }
  return p;
}

inline double max_edge(const MixedBox& b) {
  double e = 0.0;
  for (int i = 0; i < b.num_coordinates(); ++i) e = std::max(e, b.edge(i));
  return e;
}

}  // namespace detail

inline MultiUserResult bnb_multi_user(const ChannelSet& channels, double sinr_min, double noise_power,
                                      const MultiUserOptions& opt = {}) {
  using clock = std::chrono::steady_clock;
  const auto started = clock::now();
  const int L = channels.antennas_per_waveguide;
  const int N = channels.num_waveguides;
  const int K = channels.num_users();
  const int M = N * L;
  const Eigen::MatrixXcd coeffs = antenna_coefficients(channels);
  MultiUserResult res;

  // Root probe: all antennas active.
  const FixedSolve probe =
      solve_fixed_activation(channels, ActivationPattern::all_on(L, N), sinr_min, noise_power);
  if (opt.p0 > 0.0) res.p0 = opt.p0;
  else if (opt.baseline_power > 0.0) res.p0 = 100.0 * opt.baseline_power;
  else if (probe.feasible) res.p0 = 100.0 * probe.power;
  else {
    res.stop_reason = "root infeasible";
    return res;
  }
  if (probe.feasible && res.p0 < probe.power) res.p0 = 100.0 * probe.power;
  res.epsilon = opt.epsilon > 0.0 ? opt.epsilon : 1e-6 * (probe.feasible ? probe.power : res.p0 / 100.0);
  const double eps = res.epsilon;
  const double sqrt_p0 = std::sqrt(res.p0);
  const double B = M + 2.0 * N * K;
  const double gap_scale = std::sqrt(2.0 * M * res.p0 * B);
  res.cert = certificate(M, N, K, res.p0, eps);

  double gub = std::numeric_limits<double>::infinity();
  std::unordered_map<ActivationPattern, FixedSolve> memo;

  auto upper = [&](const ActivationPattern& p) {
    auto it = memo.find(p);
    if (it == memo.end()) {
      Eigen::VectorXd rb(N);
      for (int n = 0; n < N; ++n) rb(n) = sqrt_p0 * std::sqrt(static_cast<double>(std::max(1, p.count(n))));
      it = memo.emplace(p, solve_fixed_activation(channels, p, sinr_min, noise_power, &rb)).first;
    }
    const FixedSolve& f = it->second;
    if (f.feasible && f.power < gub) {
      gub = f.power;
      res.pattern = p;
      res.W = f.W;
      res.power = f.power;
      res.feasible = true;
    }
  };
  if (probe.feasible) {
    gub = probe.power;
    res.pattern = ActivationPattern::all_on(L, N);
    res.W = probe.W;
    res.power = probe.power;
    res.feasible = true;
  }

  auto tighten = [&](MixedBox& b) {
    if (!opt.tighten_with_gub || !std::isfinite(gub)) return true;
    const double r = std::sqrt(gub);
    b.re_lo = b.re_lo.cwiseMax(-r);
    b.im_lo = b.im_lo.cwiseMax(-r);
    b.re_hi = b.re_hi.cwiseMin(r);
    b.im_hi = b.im_hi.cwiseMin(r);
    return (b.re_lo.array() <= b.re_hi.array()).all() && (b.im_lo.array() <= b.im_hi.array()).all();
  };

  double floor = std::numeric_limits<double>::infinity();
  std::vector<detail::MuNode> open;
  long next_id = 0;
  auto evaluate = [&](MixedBox box, double parent_lb) {
    if (!tighten(box)) return;
    const detail::MuBound b = detail::bound_multi(box, coeffs, L, sinr_min, noise_power, opt.solver_tol);
    ++res.nodes;
    res.solver_failures += b.solver_failed ? 1 : 0;
    if (b.infeasible) return;
    upper(detail::round_activation(b.relaxed_a, box.a, b.row_power, L));
    detail::MuNode node{std::move(box), std::max(b.lb, parent_lb), next_id++};
    if (node.lb >= gub) return;
    if (node.lb >= gub - eps) {
      floor = std::min(floor, node.lb);
      return;
    }
    open.push_back(std::move(node));
  };

  evaluate(MixedBox::root(M, N, K, sqrt_p0), 0.0);
  double glb = 0.0;
  while (true) {
    std::vector<detail::MuNode> keep;
    for (auto& nd : open) {
      if (nd.lb >= gub) continue;
      if (nd.lb >= gub - eps) {
        floor = std::min(floor, nd.lb);
        continue;
      }
      keep.push_back(std::move(nd));
    }
    open = std::move(keep);
    double open_min = std::numeric_limits<double>::infinity();
    std::size_t sel = 0;
    for (std::size_t i = 0; i < open.size(); ++i)
      if (open[i].lb < open_min || (open[i].lb == open_min && open[i].id < open[sel].id)) {
        open_min = open[i].lb;
        sel = i;
      }
    glb = std::max(glb, std::min({open_min, floor, gub}));
    const double edge = open.empty() ? 0.0 : detail::max_edge(open[sel].box);
    res.trace.push_back({res.iterations, gub, glb, edge, static_cast<int>(open.size())});
    const double gap = gub - glb;
    if (!open.empty() && std::isfinite(gub)) {
      if (edge <= res.cert.xi && gap > eps) res.edge_check_holds = false;
      if (gap > gap_scale * edge * (1.0 + 1e-12)) res.gap_bound_holds = false;
    }
    if (open.empty()) {
      res.stop_reason = "exhausted";
      break;
    }
    if (gap <= eps) {
      res.stop_reason = "gap";
      break;
    }
    if (opt.max_iterations > 0 && res.iterations >= opt.max_iterations) {
      res.stop_reason = "iteration limit";
      break;
    }
    if (opt.time_limit > 0.0 &&
        std::chrono::duration<double>(clock::now() - started).count() >= opt.time_limit) {
      res.stop_reason = "time limit";
      break;
    }
    ++res.iterations;
    if (static_cast<double>(res.iterations) > res.cert.t_max) res.within_t_max = false;
    detail::MuNode node = std::move(open[sel]);
    open.erase(open.begin() + static_cast<std::ptrdiff_t>(sel));

    // Longest edge, lowest index on ties (binaries precede continuous coordinates).
    int coord = 0;
    double longest = -1.0;
    for (int i = 0; i < node.box.num_coordinates(); ++i) {
      const double e = node.box.edge(i);
      if (e > longest) {
        longest = e;
        coord = i;
      }
    }
    MixedBox lo = node.box;
    MixedBox hi = node.box;
    if (coord < M) {
      const auto c = static_cast<std::size_t>(coord);
      lo.a.lo[c] = lo.a.hi[c] = 0;
      hi.a.lo[c] = hi.a.hi[c] = 1;
    } else {
      const Eigen::Index j = coord - M;
      const Eigen::Index nk = node.box.re_lo.size();
      auto split = [&](Eigen::MatrixXd& l0, Eigen::MatrixXd& h0, Eigen::MatrixXd& l1, Eigen::Index idx) {
        const double mid = 0.5 * (l0(idx) + h0(idx));
        h0(idx) = mid;
        l1(idx) = mid;
      };
      if (j < nk) split(lo.re_lo, lo.re_hi, hi.re_lo, j);
      else split(lo.im_lo, lo.im_hi, hi.im_lo, j - nk);
    }
    evaluate(std::move(lo), node.lb);
    evaluate(std::move(hi), node.lb);
  }
  res.glb = std::min(glb, gub);
  res.gap = res.feasible ? gub - res.glb : std::numeric_limits<double>::infinity();
  res.certified = res.feasible && res.gap <= eps;
  return res;
}

}  // namespace pass
