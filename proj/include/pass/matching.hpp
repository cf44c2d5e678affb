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

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "pass/beamforming.hpp"
#include "pass/channel.hpp"

// Many-to-many matching between antenna locations and waveguides. A matched pair
// (l, n) activates location l on waveguide n.

namespace pass {

struct MatchingState {
  ActivationPattern pattern;
  Eigen::MatrixXcd W;  // N x K, cached for pattern
  bool feasible = false;

  double power() const { return feasible ? W.squaredNorm() : std::numeric_limits<double>::infinity(); }
  double utility() const { return -power(); }
};

enum class SwapKind { Add, Replace, Exchange };

inline std::string to_string(SwapKind k) {
  switch (k) {
    case SwapKind::Add: return "add";
    case SwapKind::Replace: return "replace";
    case SwapKind::Exchange: return "exchange";
  }
  return "?";
}

/// Add: (l, n) joins. Replace: (l, n) leaves, (l2, n) joins.
/// Exchange: (l, n), (l2, n2) become (l, n2), (l2, n).
struct SwapOp {
  SwapKind kind = SwapKind::Add;
  int l = 0, n = 0;
  int l2 = -1, n2 = -1;
};

struct Utilities {
  Eigen::VectorXd waveguide;  // U_n, length N
  Eigen::VectorXd location;   // U_l, length L
  double total = 0.0;
};

inline Utilities utilities(const MatchingState& s) {
  const int L = s.pattern.antennas_per_waveguide();
  const int N = s.pattern.num_waveguides();
  Utilities u;
  u.waveguide = Eigen::VectorXd::Zero(N);
  u.location = Eigen::VectorXd::Zero(L);
  if (!s.feasible) {
    u.total = -std::numeric_limits<double>::infinity();
    return u;
  }
  for (int n = 0; n < N; ++n) {
    const double row = s.W.row(n).squaredNorm();
    u.waveguide(n) = -row;
    const int c = s.pattern.count(n);
    if (c == 0) continue;
    for (int l = 0; l < L; ++l)
      if (s.pattern.at(l, n)) u.location(l) -= row / c;
  }
  u.total = -s.W.squaredNorm();
  return u;
}

inline bool is_valid_matching(const ActivationPattern& p) {
  for (int n = 0; n < p.num_waveguides(); ++n)
    if (p.count(n) == 0) return false;
  return true;
}

inline std::optional<ActivationPattern> apply_swap(const ActivationPattern& p, const SwapOp& op) {
  ActivationPattern q = p;
  switch (op.kind) {
    case SwapKind::Add:
      if (p.at(op.l, op.n)) return std::nullopt;
      q.set(op.l, op.n, true);
      break;
    case SwapKind::Replace:
      if (!p.at(op.l, op.n) || op.l2 == op.l || p.at(op.l2, op.n)) return std::nullopt;
      q.set(op.l, op.n, false);
      q.set(op.l2, op.n, true);
      break;
    case SwapKind::Exchange:
      if (op.l == op.l2 || op.n == op.n2) return std::nullopt;
      if (!p.at(op.l, op.n) || !p.at(op.l2, op.n2) || p.at(op.l, op.n2) || p.at(op.l2, op.n)) return std::nullopt;
      q.set(op.l, op.n, false);
      q.set(op.l2, op.n2, false);
      q.set(op.l, op.n2, true);
      q.set(op.l2, op.n, true);
      break;
  }
  if (!is_valid_matching(q)) return std::nullopt;
  return q;
}

/// Feasible swaps of the current matching: adds, then replaces, then exchanges,
/// each in ascending flat index order.
inline std::vector<SwapOp> propose_swaps(const ActivationPattern& p) {
  const int L = p.antennas_per_waveguide();
  const int N = p.num_waveguides();
  const int M = L * N;
  std::vector<SwapOp> out;
  for (int m = 0; m < M; ++m)
    if (!p.flat(m)) out.push_back({SwapKind::Add, m % L, m / L, -1, -1});
  for (int m = 0; m < M; ++m) {
    if (!p.flat(m)) continue;
    const int l = m % L, n = m / L;
    for (int l2 = 0; l2 < L; ++l2)
      if (l2 != l && !p.at(l2, n)) out.push_back({SwapKind::Replace, l, n, l2, -1});
  }
  for (int m = 0; m < M; ++m) {
    if (!p.flat(m)) continue;
    for (int m2 = m + 1; m2 < M; ++m2) {
      if (!p.flat(m2)) continue;
      const SwapOp op{SwapKind::Exchange, m % L, m / L, m2 % L, m2 / L};
      if (apply_swap(p, op)) out.push_back(op);
    }
  }
  return out;
}

struct MatchingOptions {
  double margin = 1e-9;     // watts; accepted swaps lower the power by more than this
  int max_rounds = 50;
  bool individual = false;  // vanilla acceptance on the involved agents' own utilities
};

struct MatchingRound {
  int round;
  int evaluated;
  int accepted;
  double power;
};

struct MatchingResult {
  MatchingState state;
  double power = std::numeric_limits<double>::infinity();
  int rounds = 0;
  bool converged = false;  // last full round accepted nothing
  bool revisited = false;  // an accepted swap returned to an earlier matching
  long evaluated = 0;
  std::vector<double> accepted_powers;  // power after initialisation and after each accepted swap
  std::vector<MatchingRound> trace;
};

class MatchingEvaluator {
 public:
  MatchingEvaluator(const ChannelSet& channels, double sinr_min, double noise_power)
      : channels_(channels), sinr_min_(sinr_min), noise_(noise_power) {}

  MatchingState evaluate(const ActivationPattern& p) const {
    MatchingState s;
    s.pattern = p;
    const FixedSolve f = beamform_fixed(effective_channel(channels_, p), sinr_min_, noise_);
    s.feasible = f.feasible;
    if (f.feasible) s.W = f.W;
    return s;
  }

  const ChannelSet& channels() const { return channels_; }

 private:
  const ChannelSet& channels_;
  double sinr_min_;
  double noise_;
};

namespace detail {

inline bool individually_improving(const MatchingState& before, const MatchingState& after, const SwapOp& op,
                                   double margin) {
  const Utilities a = utilities(before);
  const Utilities b = utilities(after);
  std::vector<int> ls{op.l};
  std::vector<int> ns{op.n};
  if (op.l2 >= 0) ls.push_back(op.l2);
  if (op.n2 >= 0) ns.push_back(op.n2);
  bool strict = false;
  for (int l : ls) {
    if (b.location(l) < a.location(l) - margin) return false;
    strict = strict || b.location(l) > a.location(l) + margin;
  }
  for (int n : ns) {
    if (b.waveguide(n) < a.waveguide(n) - margin) return false;
    strict = strict || b.waveguide(n) > a.waveguide(n) + margin;
  }
  return strict;
}

}  // namespace detail

/// Evaluates the swap and returns the new state when it is accepted.
inline std::optional<MatchingState> apply_if_welfare_improving(const MatchingEvaluator& ev,
                                                               const MatchingState& state, const SwapOp& op,
                                                               const MatchingOptions& opt = {}) {
  const auto q = apply_swap(state.pattern, op);
  if (!q) return std::nullopt;
  MatchingState next = ev.evaluate(*q);
  if (!next.feasible) return std::nullopt;
  const bool ok = opt.individual ? detail::individually_improving(state, next, op, opt.margin)
                                 : next.utility() > state.utility() + opt.margin;
  if (!ok) return std::nullopt;
  return next;
}

/// One antenna per waveguide: the location maximising |g~| max_k |h|.
inline ActivationPattern initial_matching(const ChannelSet& channels) {
  const int L = channels.antennas_per_waveguide;
  const int N = channels.num_waveguides;
  ActivationPattern p(L, N);
  for (int n = 0; n < N; ++n) {
    int best = 0;
    double best_gain = -1.0;
    for (int l = 0; l < L; ++l) {
      const int m = channels.flat(l, n);
      const double g = std::abs(channels.in_waveguide(m)) * channels.free_space.row(m).cwiseAbs().maxCoeff();
      if (g > best_gain) {
        best_gain = g;
        best = l;
      }
    }
    p.set(best, n, true);
  }
  return p;
}

inline MatchingResult welfare_matching(const ChannelSet& channels, double sinr_min, double noise_power,
                                       const MatchingOptions& opt = {}) {
  const MatchingEvaluator ev(channels, sinr_min, noise_power);
  const int L = channels.antennas_per_waveguide;
  const int N = channels.num_waveguides;
  const int M = L * N;
  MatchingResult res;
  MatchingState s = ev.evaluate(initial_matching(channels));
  if (!s.feasible) {
    // Fall back to the first feasible single-add extension, if any.
    for (const SwapOp& op : propose_swaps(s.pattern)) {
      if (op.kind != SwapKind::Add) continue;
      MatchingState t = ev.evaluate(*apply_swap(s.pattern, op));
      if (t.feasible) {
        s = std::move(t);
        break;
      }
    }
    if (!s.feasible) throw std::runtime_error("welfare_matching: no feasible initial matching");
  }
  std::unordered_set<ActivationPattern> visited{s.pattern};
  res.accepted_powers.push_back(s.power());

  auto attempt = [&](const SwapOp& op, int& evaluated, int& accepted) {
    if (!apply_swap(s.pattern, op)) return;
    ++evaluated;
    auto next = apply_if_welfare_improving(ev, s, op, opt);
    if (!next) return;
    s = std::move(*next);
    ++accepted;
    if (!visited.insert(s.pattern).second) res.revisited = true;
    res.accepted_powers.push_back(s.power());
  };

  while (res.rounds < opt.max_rounds) {
    ++res.rounds;
    int evaluated = 0, accepted = 0;
    for (int m = 0; m < M; ++m)
      attempt({SwapKind::Add, m % L, m / L, -1, -1}, evaluated, accepted);
    for (int m = 0; m < M; ++m) {
      const int l = m % L, n = m / L;
      for (int l2 = 0; l2 < L; ++l2)
        if (l2 != l) attempt({SwapKind::Replace, l, n, l2, -1}, evaluated, accepted);
      for (int m2 = 0; m2 < M; ++m2)
        if (m2 != m) attempt({SwapKind::Exchange, l, n, m2 % L, m2 / L}, evaluated, accepted);
    }
    res.evaluated += evaluated;
    res.trace.push_back({res.rounds, evaluated, accepted, s.power()});
    if (accepted == 0) {
      res.converged = true;
      break;
    }
  }
  res.power = s.power();
  res.state = std::move(s);
  return res;
}

/// True when no feasible swap lowers the total power by more than margin.
inline bool verify_pairwise_stable(const ChannelSet& channels, double sinr_min, double noise_power,
                                   const MatchingState& state, double margin = 1e-9) {
  const MatchingEvaluator ev(channels, sinr_min, noise_power);
  MatchingOptions opt;
  opt.margin = margin;
  for (const SwapOp& op : propose_swaps(state.pattern))
    if (apply_if_welfare_improving(ev, state, op, opt)) return false;
  return true;
}

}  // namespace pass
