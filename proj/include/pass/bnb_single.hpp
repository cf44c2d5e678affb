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
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pass/beamforming.hpp"
#include "pass/relaxations.hpp"

// Globally optimal single-user activation by branch-and-bound over the binary
// activation vector, one run per choice of per-waveguide active counts.

namespace pass {

enum class CountMode { PerWaveguideSearch, EqualCounts };

struct SingleUserOptions {
  double epsilon = 0.0;  // watts; 0 selects 1e-6 * sigma^2 * gamma
  CountMode mode = CountMode::PerWaveguideSearch;
  bool share_gub = true;  // false resets the upper bound for every count vector
  double solver_tol = 1e-8;
};

struct SingleUserTraceRow {
  long iteration;
  int run;
  std::string counts;
  double gub;
  double glb;
  int open;
};

struct SingleUserResult {
  bool feasible = false;
  ActivationPattern pattern;
  std::vector<int> counts;
  Eigen::VectorXcd w;
  double power = std::numeric_limits<double>::infinity();
  double glb = 0.0;
  double gap = std::numeric_limits<double>::infinity();
  double epsilon = 0.0;
  long iterations = 0;
  long nodes = 0;
  int runs = 0;
  int solver_failures = 0;
  std::vector<SingleUserTraceRow> trace;
};

/// Count vectors in descending lexicographic order.
inline std::vector<std::vector<int>> count_vectors(int N, int L, CountMode mode) {
  std::vector<std::vector<int>> out;
  if (mode == CountMode::EqualCounts) {
    for (int c = L; c >= 1; --c) out.emplace_back(static_cast<std::size_t>(N), c);
    return out;
  }
  std::vector<int> cur(static_cast<std::size_t>(N), L);
  while (true) {
    out.push_back(cur);
    int i = N - 1;
    while (i >= 0 && cur[static_cast<std::size_t>(i)] == 1) {
      cur[static_cast<std::size_t>(i)] = L;
      --i;
    }
    if (i < 0) break;
    --cur[static_cast<std::size_t>(i)];
  }
  return out;
}

/// Per waveguide, keeps fixed ones and fills up to counts[n] with the largest relaxed
/// free entries. Returns false when the fixings already exceed the count.
inline bool project_activation(const std::vector<double>& relaxed, const BinaryBox& box,
                               const std::vector<int>& counts, int L, ActivationPattern& out) {
  const int N = static_cast<int>(counts.size());
  out = ActivationPattern(L, N);
  for (int n = 0; n < N; ++n) {
    int ones = 0;
    std::vector<int> free;
    for (int l = 0; l < L; ++l) {
      const int m = n * L + l;
      if (box.fixed(m)) {
        if (box.lo[static_cast<std::size_t>(m)]) {
          out.set(l, n, true);
          ++ones;
        }
      } else {
        free.push_back(m);
      }
    }
    const int need = counts[static_cast<std::size_t>(n)] - ones;
    if (need < 0 || need > static_cast<int>(free.size())) return false;
    std::stable_sort(free.begin(), free.end(), [&](int a, int b) {
      return relaxed[static_cast<std::size_t>(a)] > relaxed[static_cast<std::size_t>(b)];
    });
    for (int i = 0; i < need; ++i) out.set_flat(free[static_cast<std::size_t>(i)], true);
  }
  return true;
}

namespace detail {

struct SuNode {
  BinaryBox box;
  double lb = 0.0;
  long id = 0;
};

struct SuBound {
  bool infeasible = false;
  double lb = 0.0;
  double ub = std::numeric_limits<double>::infinity();
  ActivationPattern pattern;
  BinaryBox tightened;
  bool solver_failed = false;
};

/// Fixes entries forced by the cardinality rows; false when the box holds no
/// binary point with the requested counts.
inline bool propagate_counts(BinaryBox& box, const std::vector<int>& counts, int L) {
  for (std::size_t n = 0; n < counts.size(); ++n) {
    int ones = 0;
    int free = 0;
    for (int l = 0; l < L; ++l) {
      const int m = static_cast<int>(n) * L + l;
      if (box.fixed(m)) ones += box.lo[static_cast<std::size_t>(m)];
      else ++free;
    }
    const int rem = counts[n] - ones;
    if (rem < 0 || rem > free) return false;
    if (rem == 0 || rem == free) {
      for (int l = 0; l < L; ++l) {
        const auto m = static_cast<std::size_t>(static_cast<int>(n) * L + l);
        if (box.lo[m] != box.hi[m]) box.lo[m] = box.hi[m] = rem == 0 ? 0 : 1;
      }
    }
  }
  return true;
}

inline SuBound bound_single(const BinaryBox& in, const std::vector<int>& counts,
                            const Eigen::VectorXcd& coeffs, const ChannelSet& channels, double gamma,
                            double noise, double tol) {
  SuBound b;
  b.tightened = in;
  const int L = channels.antennas_per_waveguide;
  if (!propagate_counts(b.tightened, counts, L)) {
    b.infeasible = true;
    return b;
  }
  const int M = b.tightened.size();
  std::vector<double> relaxed(static_cast<std::size_t>(M), 0.0);
  if (b.tightened.is_point()) {
    b.pattern = ActivationPattern(L, static_cast<int>(counts.size()));
    for (int m = 0; m < M; ++m) b.pattern.set_flat(m, b.tightened.lo[static_cast<std::size_t>(m)] != 0);
    b.ub = closed_form_power(channels, b.pattern, gamma, noise);
    b.lb = b.ub;
    b.infeasible = !std::isfinite(b.ub);
    return b;
  }
  const P1CProgram p = build_P1C(b.tightened, counts, coeffs, L, gamma, noise);
  if (p.infeasible) {
    b.infeasible = true;
    return b;
  }
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
    const double f = p.value_scale * -rep.objective;
    b.lb = f > 0.0 ? 1.0 / (f * (1.0 + 10.0 * used_tol)) : 0.0;
  } else {
    b.solver_failed = true;
    b.lb = 0.0;  // do not prune
  }
  for (int m = 0; m < M; ++m) relaxed[static_cast<std::size_t>(m)] = p.a[static_cast<std::size_t>(m)].eval(rep.x);
  if (project_activation(relaxed, b.tightened, counts, L, b.pattern))
    b.ub = closed_form_power(channels, b.pattern, gamma, noise);
  return b;
}

inline std::string counts_string(const std::vector<int>& c) {
  std::string s;
  for (std::size_t i = 0; i < c.size(); ++i) s += (i ? "-" : "") + std::to_string(c[i]);
  return s;
}

}  // namespace detail

inline SingleUserResult bnb_single_user(const ChannelSet& channels, double sinr_min, double noise_power,
                                        const SingleUserOptions& opt = {}) {
  const int L = channels.antennas_per_waveguide;
  const int N = channels.num_waveguides;
  const Eigen::VectorXcd coeffs = antenna_coefficients(channels).col(0);
  SingleUserResult res;
  res.epsilon = opt.epsilon > 0.0 ? opt.epsilon : 1e-6 * noise_power * sinr_min;
  const double eps = res.epsilon;
  if (!(coeffs.cwiseAbs().maxCoeff() > 0.0)) return res;

  double gub = std::numeric_limits<double>::infinity();
  double best_power = gub;
  double global_floor = std::numeric_limits<double>::infinity();
  int run = 0;
  for (const auto& counts : count_vectors(N, L, opt.mode)) {
    ++run;
    if (!opt.share_gub) gub = std::numeric_limits<double>::infinity();
    const std::string tag = detail::counts_string(counts);
    double floor = std::numeric_limits<double>::infinity();
    std::vector<detail::SuNode> open;
    long next_id = 0;

    auto offer = [&](const detail::SuBound& b) {
      if (b.ub < gub) gub = b.ub;
      if (b.ub < best_power) {
        best_power = b.ub;
        res.pattern = b.pattern;
        res.counts = counts;
      }
    };
    auto admit = [&](detail::SuNode node) {
      if (node.lb >= gub) return;
      if (node.lb >= gub - eps) {
        floor = std::min(floor, node.lb);
        return;
      }
      open.push_back(std::move(node));
    };

    const detail::SuBound root =
        detail::bound_single(BinaryBox::full(N * L), counts, coeffs, channels, sinr_min, noise_power, opt.solver_tol);
    ++res.nodes;
    res.solver_failures += root.solver_failed ? 1 : 0;
    if (!root.infeasible) {
      offer(root);
      admit({root.tightened, root.lb, next_id++});
    }
    double run_glb = 0.0;
    while (true) {
      double open_min = std::numeric_limits<double>::infinity();
      std::size_t sel = 0;
      for (std::size_t i = 0; i < open.size(); ++i)
        if (open[i].lb < open_min || (open[i].lb == open_min && open[i].id < open[sel].id)) {
          open_min = open[i].lb;
          sel = i;
        }
      run_glb = std::max(run_glb, std::min({open_min, floor, gub}));
      res.trace.push_back({res.iterations, run, tag, gub, run_glb, static_cast<int>(open.size())});
      if (open.empty() || gub - run_glb <= eps) break;
      ++res.iterations;
      detail::SuNode node = open[sel];
      open.erase(open.begin() + static_cast<std::ptrdiff_t>(sel));
      int coord = 0;
      while (node.box.fixed(coord)) ++coord;  // longest edge; all free edges have length 1
      for (std::uint8_t v : {std::uint8_t{0}, std::uint8_t{1}}) {
        BinaryBox child = node.box;
        child.lo[static_cast<std::size_t>(coord)] = child.hi[static_cast<std::size_t>(coord)] = v;
        const detail::SuBound b =
            detail::bound_single(child, counts, coeffs, channels, sinr_min, noise_power, opt.solver_tol);
        ++res.nodes;
        res.solver_failures += b.solver_failed ? 1 : 0;
        if (b.infeasible) continue;
        offer(b);
        admit({b.tightened, std::max(b.lb, node.lb), next_id++});
      }
      // Drop boxes the new incumbent dominates.
      std::vector<detail::SuNode> keep;
      for (auto& nd : open) {
        if (nd.lb >= gub) continue;
        if (nd.lb >= gub - eps) {
          floor = std::min(floor, nd.lb);
          continue;
        }
        keep.push_back(std::move(nd));
      }
      open = std::move(keep);
    }
    global_floor = std::min(global_floor, run_glb);
  }
  res.runs = run;
  if (!std::isfinite(best_power)) return res;
  res.feasible = true;
  res.power = best_power;
  res.glb = std::min(global_floor, best_power);
  res.gap = res.power - res.glb;
  res.w = mrt_beamformer(effective_channel(channels, res.pattern).col(0), res.power);
  return res;
}

}  // namespace pass
