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

#include <Eigen/Dense>

#include "pass/channel.hpp"
#include "pass/conic.hpp"

// Beamforming for a fixed activation pattern: single-user closed form and MRT,
// the power-minimisation SOCP over effective channels, and the KKT fixed point.

namespace pass {

/// Single-user minimum power sigma^2 gamma / ||h~||^2; +inf when the channel vanishes.
inline double closed_form_power(const Eigen::VectorXcd& h_eff, double sinr_min, double noise_power) {
  const double g = h_eff.squaredNorm();
  if (!(g > 0.0)) return std::numeric_limits<double>::infinity();
  return noise_power * sinr_min / g;
}

inline double closed_form_power(const ChannelSet& channels, const ActivationPattern& pattern,
                                double sinr_min, double noise_power) {
  return closed_form_power(effective_channel(channels, pattern).col(0), sinr_min, noise_power);
}

/// w = sqrt(P) h~ / ||h~||.
inline Eigen::VectorXcd mrt_beamformer(const Eigen::VectorXcd& h_eff, double power) {
  const double nrm = h_eff.norm();
  if (!(nrm > 0.0)) throw std::invalid_argument("mrt_beamformer: all-zero effective channel");
  return std::sqrt(power) * h_eff / nrm;
}

struct FixedSolve {
  bool feasible = false;
  double power = std::numeric_limits<double>::infinity();
  Eigen::MatrixXcd W;  // N x K
  socp::Status status = socp::Status::NumericalFailure;
  int iterations = 0;
};

/// Power-minimal W for effective channels H (N x K):
///   min ||W||_F^2  s.t.  Re{h~_k^H w_k} >= sqrt(gamma (sum_{j!=k} |h~_k^H w_j|^2 + sigma^2)),
///                        Im{h~_k^H w_k} = 0.
/// row_bound (optional, per row n) adds |Re w_{n,k}|, |Im w_{n,k}| <= row_bound(n).
inline FixedSolve solve_fixed_channel(const Eigen::MatrixXcd& H, double sinr_min, double noise_power,
                                      const Eigen::VectorXd* row_bound = nullptr,
                                      const socp::SolverOptions& opt = {}) {
  using socp::AffineExpr;
  const auto N = H.rows();
  const auto K = H.cols();
  FixedSolve out;
  out.W = Eigen::MatrixXcd::Zero(N, K);
  const double amp = H.cwiseAbs().maxCoeff();
  if (!(amp > 0.0)) return out;
  const double sigma = std::sqrt(noise_power);
  const Eigen::MatrixXcd Hn = H / amp;
  const double unit = sigma / amp;  // raw weight per normalised weight
  const double rg = std::sqrt(sinr_min);

  socp::ConicProgram prog;
  std::vector<int> wr(static_cast<std::size_t>(N * K));
  std::vector<int> wi(static_cast<std::size_t>(N * K));
  auto at = [&](Eigen::Index n, Eigen::Index k) { return static_cast<std::size_t>(k * N + n); };
  for (Eigen::Index k = 0; k < K; ++k)
    for (Eigen::Index n = 0; n < N; ++n) {
      wr[at(n, k)] = prog.add_var();
      wi[at(n, k)] = prog.add_var();
      prog.add_squared(AffineExpr::var(wr[at(n, k)]));
      prog.add_squared(AffineExpr::var(wi[at(n, k)]));
      if (row_bound) {
        const double b = (*row_bound)(n) / unit;
        for (int v : {wr[at(n, k)], wi[at(n, k)]}) {
          prog.add_le(AffineExpr::var(v), b);
          prog.add_ge(AffineExpr::var(v), -b);
        }
      }
    }
  // amplitude h~_k^H w_j = sum_n conj(H(n,k)) w(n,j)
  auto amplitude = [&](Eigen::Index k, Eigen::Index j, AffineExpr& re, AffineExpr& im) {
    for (Eigen::Index n = 0; n < N; ++n) {
      const double hr = Hn(n, k).real();
      const double hi = -Hn(n, k).imag();
      if (hr == 0.0 && hi == 0.0) continue;
      re.add(wr[at(n, j)], hr).add(wi[at(n, j)], -hi);
      im.add(wi[at(n, j)], hr).add(wr[at(n, j)], hi);
    }
  };
  for (Eigen::Index k = 0; k < K; ++k) {
    AffineExpr sre;
    AffineExpr sim;
    amplitude(k, k, sre, sim);
    std::vector<AffineExpr> args;
    for (Eigen::Index j = 0; j < K; ++j) {
      if (j == k) continue;
      AffineExpr re;
      AffineExpr im;
      amplitude(k, j, re, im);
      args.push_back(re * rg);
      args.push_back(im * rg);
    }
    args.emplace_back(rg);
    prog.add_soc(sre, args);
    prog.add_eq(sim);
  }
  const socp::SolveReport rep = socp::solve_conic(prog, opt);
  out.status = rep.status;
  out.iterations = rep.iterations;
  if (rep.status != socp::Status::Optimal) return out;
  for (Eigen::Index k = 0; k < K; ++k)
    for (Eigen::Index n = 0; n < N; ++n)
      out.W(n, k) = unit * cd(rep.x(wr[at(n, k)]), rep.x(wi[at(n, k)]));
  out.feasible = true;
  out.power = out.W.squaredNorm();
  return out;
}

/// Fixed-activation SOCP under equal-power radiation.
inline FixedSolve solve_fixed_activation(const ChannelSet& channels, const ActivationPattern& pattern,
                                         double sinr_min, double noise_power,
                                         const Eigen::VectorXd* row_bound = nullptr,
                                         const socp::SolverOptions& opt = {}) {
  return solve_fixed_channel(effective_channel(channels, pattern), sinr_min, noise_power, row_bound, opt);
}

struct KktResult {
  bool converged = false;
  Eigen::MatrixXcd W;          // N x K
  Eigen::VectorXd powers;      // p_k
  Eigen::VectorXd multipliers; // lambda_k, noise-normalised
  int iterations = 0;
  double power = std::numeric_limits<double>::infinity();
};

/// Optimal downlink beamformer via the dual (uplink) multipliers. With h = h~/sigma and
/// S(lambda) = I + sum_i lambda_i h_i h_i^H the multipliers solve
///   lambda_k (1 + 1/gamma) h_k^H S^{-1} h_k = 1,
/// i.e. the fixed point lambda_k <- 1 / ((1 + 1/gamma) h_k^H S^{-1} h_k). Newton steps on this
/// system are taken when they reduce the residual, plain fixed-point steps otherwise.
/// Directions are S^{-1} h_k and powers follow from the SINR equalities.
inline KktResult kkt_beamformer(const Eigen::MatrixXcd& H, double sinr_min, double noise_power,
                                double tol = 1e-10, int max_iter = 500) {
  KktResult r;
  const auto N = H.rows();
  const auto K = H.cols();
  const Eigen::MatrixXcd Hs = H / std::sqrt(noise_power);
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const double g = Hs.col(k).squaredNorm();
    if (!(g > 0.0)) return r;
    lam(k) = sinr_min / g;
  }
  auto system = [&](const Eigen::VectorXd& l) {
    Eigen::MatrixXcd S = Eigen::MatrixXcd::Identity(N, N);
    for (Eigen::Index i = 0; i < K; ++i) S.noalias() += l(i) * Hs.col(i) * Hs.col(i).adjoint();
    return S;
  };
  const double scale = 1.0 + 1.0 / sinr_min;
  // X(k, j) = h_k^H S^{-1} h_j
  auto cross = [&](const Eigen::VectorXd& l) -> Eigen::MatrixXcd {
    return Hs.adjoint() * Eigen::LDLT<Eigen::MatrixXcd>(system(l)).solve(Hs);
  };
  auto residual = [&](const Eigen::VectorXd& l, const Eigen::MatrixXcd& X) {
    Eigen::VectorXd F(K);
    for (Eigen::Index k = 0; k < K; ++k) F(k) = scale * l(k) * X(k, k).real() - 1.0;
    return F;
  };
  Eigen::MatrixXcd X = cross(lam);
  Eigen::VectorXd F = residual(lam, X);
  for (r.iterations = 1; r.iterations <= max_iter; ++r.iterations) {
    Eigen::MatrixXd J(K, K);
    for (Eigen::Index k = 0; k < K; ++k)
      for (Eigen::Index j = 0; j < K; ++j)
        J(k, j) = scale * ((k == j ? X(k, k).real() : 0.0) - lam(k) * std::norm(X(k, j)));
    Eigen::VectorXd next = lam - J.partialPivLu().solve(F);
    Eigen::MatrixXcd Xn;
    Eigen::VectorXd Fn;
    bool newton_ok = next.allFinite() && (next.array() > 0.0).all();
    if (newton_ok) {
      Xn = cross(next);
      Fn = residual(next, Xn);
      newton_ok = Fn.allFinite() && Fn.cwiseAbs().maxCoeff() < F.cwiseAbs().maxCoeff();
    }
    if (!newton_ok) {
      for (Eigen::Index k = 0; k < K; ++k) next(k) = 1.0 / (scale * X(k, k).real());
      if (!next.allFinite() || (next.array() <= 0.0).any()) return r;
      Xn = cross(next);
      Fn = residual(next, Xn);
    }
    const double change = ((next - lam).array().abs() / next.array()).maxCoeff();
    lam = next;
    X = Xn;
    F = Fn;
    if (change < tol || F.cwiseAbs().maxCoeff() < 1e-14) {
      r.converged = true;
      break;
    }
  }
  if (!r.converged) return r;
  const Eigen::MatrixXcd D = Eigen::LDLT<Eigen::MatrixXcd>(system(lam)).solve(Hs);
  Eigen::MatrixXcd dirs(N, K);
  for (Eigen::Index k = 0; k < K; ++k) dirs.col(k) = D.col(k).normalized();
  const Eigen::MatrixXcd G = Hs.adjoint() * dirs;  // G(k, j) = h_k^H w~_j
  Eigen::MatrixXd Mm(K, K);
  for (Eigen::Index k = 0; k < K; ++k)
    for (Eigen::Index j = 0; j < K; ++j)
      Mm(k, j) = k == j ? std::norm(G(k, k)) / sinr_min : -std::norm(G(k, j));
  const Eigen::VectorXd p = Mm.partialPivLu().solve(Eigen::VectorXd::Ones(K));
  if (!p.allFinite() || (p.array() <= 0.0).any()) {
    r.converged = false;
    return r;
  }
  r.powers = p;
  r.multipliers = lam;
  r.W = dirs * p.cwiseSqrt().asDiagonal();
  // Rotate each beam so h~_k^H w_k is real positive.
  for (Eigen::Index k = 0; k < K; ++k) {
    const cd a = H.col(k).dot(r.W.col(k));
    if (std::abs(a) > 0.0) r.W.col(k) *= std::conj(a) / std::abs(a);
  }
  r.power = p.sum();
  return r;
}

/// Fixed-activation power: KKT fixed point, falling back to the SOCP.
inline FixedSolve beamform_fixed(const Eigen::MatrixXcd& H, double sinr_min, double noise_power) {
  const KktResult k = kkt_beamformer(H, sinr_min, noise_power);
  if (k.converged) {
    FixedSolve f;
    f.feasible = true;
    f.power = k.power;
    f.W = k.W;
    f.status = socp::Status::Optimal;
    f.iterations = k.iterations;
    return f;
  }
  return solve_fixed_channel(H, sinr_min, noise_power);
}

}  // namespace pass
