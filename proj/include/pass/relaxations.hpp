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
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "pass/channel.hpp"
#include "pass/conic.hpp"
#include "pass/mccormick.hpp"

// Convex relaxations used as branch-and-bound bounding functions.

namespace pass {

/// Bounds on the activation variables; lo/hi entries are 0 or 1.
struct BinaryBox {
  std::vector<std::uint8_t> lo;
  std::vector<std::uint8_t> hi;

  static BinaryBox full(int m) {
    return {std::vector<std::uint8_t>(static_cast<std::size_t>(m), 0),
            std::vector<std::uint8_t>(static_cast<std::size_t>(m), 1)};
  }
  int size() const { return static_cast<int>(lo.size()); }
  bool fixed(int i) const { return lo[static_cast<std::size_t>(i)] == hi[static_cast<std::size_t>(i)]; }
  bool is_point() const {
    for (int i = 0; i < size(); ++i)
      if (!fixed(i)) return false;
    return true;
  }
};

// ---------------------------------------------------------------------------
// Single-user relaxation

struct P1CProgram {
  socp::ConicProgram prog;          // minimises the negated normalised objective
  std::vector<socp::AffineExpr> a;  // activation per antenna (variable or constant)
  double value_scale = 0.0;         // relaxed 1/P = value_scale * (-objective)
  bool infeasible = false;
};

/// Relaxation of max sum_n (1/(L_n sigma^2 gamma)) |sum_l E_l a_l|^2 with the product
/// matrix Q_n = a_n a_n^T replaced by its McCormick envelope, cardinality rows
/// sum_l a_{l,n} = L_n and box rows. coeffs(m) = conj(g~_m) h_m for the single user.
inline P1CProgram build_P1C(const BinaryBox& box, const std::vector<int>& counts,
                            const Eigen::VectorXcd& coeffs, int antennas_per_waveguide,
                            double sinr_min, double noise_power) {
  using socp::AffineExpr;
  const int L = antennas_per_waveguide;
  const int N = static_cast<int>(counts.size());
  if (box.size() != N * L || coeffs.size() != N * L)
    throw std::invalid_argument("build_P1C: dimension mismatch");
  P1CProgram out;
  const double amp = coeffs.cwiseAbs().maxCoeff();
  if (!(amp > 0.0)) throw std::invalid_argument("build_P1C: zero channel");
  out.value_scale = amp * amp / (noise_power * sinr_min);
  const Eigen::VectorXcd c = coeffs / amp;
  out.a.resize(static_cast<std::size_t>(N * L));

  AffineExpr objective;
  for (int n = 0; n < N; ++n) {
    const int target = counts[static_cast<std::size_t>(n)];
    if (target < 1 || target > L) throw std::invalid_argument("build_P1C: count out of range");
    int ones = 0;
    int free = 0;
    for (int l = 0; l < L; ++l) {
      const int m = n * L + l;
      if (box.fixed(m)) ones += box.lo[static_cast<std::size_t>(m)];
      else ++free;
    }
    const int remaining = target - ones;
    if (remaining < 0 || remaining > free) {
      out.infeasible = true;
      return out;
    }
    std::vector<Interval> bound(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) {
      const int m = n * L + l;
      auto& e = out.a[static_cast<std::size_t>(m)];
      if (box.fixed(m) || remaining == 0 || remaining == free) {
        double v = box.lo[static_cast<std::size_t>(m)];
        if (!box.fixed(m)) v = remaining == 0 ? 0.0 : 1.0;
        e = AffineExpr(v);
        bound[static_cast<std::size_t>(l)] = {v, v};
      } else {
        const int var = out.prog.add_var("a" + std::to_string(l) + "_" + std::to_string(n));
        e = AffineExpr::var(var);
        bound[static_cast<std::size_t>(l)] = {0.0, 1.0};
        out.prog.add_ge(e);
        out.prog.add_le(e, 1.0);
      }
    }
    if (remaining > 0 && remaining < free) {
      AffineExpr card;
      for (int l = 0; l < L; ++l) card += out.a[static_cast<std::size_t>(n * L + l)];
      out.prog.add_eq(card, AffineExpr(static_cast<double>(target)));
    }
    const double w = 1.0 / target;
    for (int l = 0; l < L; ++l) {
      const auto ul = static_cast<std::size_t>(l);
      for (int k = l; k < L; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        const double coef = (k == l ? 1.0 : 2.0) * w *
                            std::real(c(n * L + l) * std::conj(c(n * L + k)));
        const AffineExpr& x = out.a[static_cast<std::size_t>(n * L + l)];
        const AffineExpr& y = out.a[static_cast<std::size_t>(n * L + k)];
        AffineExpr q;
        if (bound[ul].is_point() && bound[uk].is_point())
          q = AffineExpr(bound[ul].lo * bound[uk].lo);
        else if (bound[ul].is_point())
          q = y * bound[ul].lo;
        else if (bound[uk].is_point())
          q = x * bound[uk].lo;
        else {
          q = AffineExpr::var(out.prog.add_var("q" + std::to_string(l) + std::to_string(k) + "_" +
                                               std::to_string(n)));
          add_envelope(out.prog, q, x, y, bound[ul], bound[uk]);
        }
        objective += q * coef;
      }
    }
  }
  out.prog.objective = objective * -1.0;
  out.prog.objective.compress();
  return out;
}

// ---------------------------------------------------------------------------
// Multi-user relaxation

/// Box over (a, Re D, Im D). Continuous bounds are in watts^(1/2) (raw units),
/// stored as N x K matrices.
struct MixedBox {
  BinaryBox a;
  Eigen::MatrixXd re_lo, re_hi, im_lo, im_hi;

  int num_binary() const { return a.size(); }
  int num_coordinates() const { return a.size() + 2 * static_cast<int>(re_lo.size()); }

  static MixedBox root(int M, int N, int K, double sqrt_p0) {
    MixedBox b;
    b.a = BinaryBox::full(M);
    b.re_lo = Eigen::MatrixXd::Constant(N, K, -sqrt_p0);
    b.re_hi = Eigen::MatrixXd::Constant(N, K, sqrt_p0);
    b.im_lo = b.re_lo;
    b.im_hi = b.re_hi;
    return b;
  }

  /// Edge length of coordinate i: binaries first, then Re D, then Im D (column-major).
  double edge(int i) const {
    const int M = a.size();
    if (i < M) return static_cast<double>(a.hi[static_cast<std::size_t>(i)] - a.lo[static_cast<std::size_t>(i)]);
    const auto nk = re_lo.size();
    const Eigen::Index j = i - M;
    if (j < nk) return re_hi(j) - re_lo(j);
    return im_hi(j - nk) - im_lo(j - nk);
  }
};

struct P2CProgram {
  socp::ConicProgram prog;
  double power_scale = 0.0;          // raw power = power_scale * objective
  double unit = 0.0;                 // raw amplitude per normalised amplitude
  Eigen::MatrixXi u, v;              // variable index of Re/Im d, N x K
  std::vector<socp::AffineExpr> a;   // per antenna
  Eigen::MatrixXi zr, zi;            // M x K (-1 where the product is a constant 0)
  bool infeasible = false;
};

/// Relaxation over a mixed box: min ||Z||_F^2 subject to per-user SOC rows on
/// E^T z_k, Im = 0 equalities, complex McCormick rows linking z_{m,k} to
/// (a_m, Re d_{n,k}, Im d_{n,k}) and the box rows. coeffs is M x K with
/// coeffs(m,k) = conj(g~_m) h_{m,k}.
inline P2CProgram build_P2C(const MixedBox& box, const Eigen::MatrixXcd& coeffs,
                            int antennas_per_waveguide, double sinr_min, double noise_power) {
  using socp::AffineExpr;
  const int L = antennas_per_waveguide;
  const int M = static_cast<int>(coeffs.rows());
  const int K = static_cast<int>(coeffs.cols());
  const int N = M / L;
  if (box.a.size() != M || box.re_lo.rows() != N || box.re_lo.cols() != K)
    throw std::invalid_argument("build_P2C: dimension mismatch");
  P2CProgram out;
  const double amp = coeffs.cwiseAbs().maxCoeff();
  if (!(amp > 0.0)) throw std::invalid_argument("build_P2C: zero channel");
  const double sigma = std::sqrt(noise_power);
  out.unit = sigma / amp;
  out.power_scale = out.unit * out.unit;
  const Eigen::MatrixXcd E = coeffs / amp;
  const double inv = 1.0 / out.unit;
  const double rg = std::sqrt(sinr_min);

  out.a.resize(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) {
    if (box.a.fixed(m)) {
      out.a[static_cast<std::size_t>(m)] = AffineExpr(box.a.lo[static_cast<std::size_t>(m)]);
    } else {
      const int var = out.prog.add_var("a" + std::to_string(m));
      out.a[static_cast<std::size_t>(m)] = AffineExpr::var(var);
      out.prog.add_ge(AffineExpr::var(var));
      out.prog.add_le(AffineExpr::var(var), 1.0);
    }
  }
  out.u.resize(N, K);
  out.v.resize(N, K);
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < N; ++n) {
      out.u(n, k) = out.prog.add_var("u" + std::to_string(n) + "_" + std::to_string(k));
      out.v(n, k) = out.prog.add_var("v" + std::to_string(n) + "_" + std::to_string(k));
      const AffineExpr u = AffineExpr::var(out.u(n, k));
      const AffineExpr v = AffineExpr::var(out.v(n, k));
      out.prog.add_ge(u, box.re_lo(n, k) * inv);
      out.prog.add_le(u, box.re_hi(n, k) * inv);
      out.prog.add_ge(v, box.im_lo(n, k) * inv);
      out.prog.add_le(v, box.im_hi(n, k) * inv);
    }

  // z entries: exact product when a is fixed, envelope variable otherwise.
  std::vector<AffineExpr> zre(static_cast<std::size_t>(M * K));
  std::vector<AffineExpr> zim(static_cast<std::size_t>(M * K));
  out.zr = Eigen::MatrixXi::Constant(M, K, -1);
  out.zi = Eigen::MatrixXi::Constant(M, K, -1);
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m) {
      const int n = m / L;
      const auto idx = static_cast<std::size_t>(k * M + m);
      const AffineExpr u = AffineExpr::var(out.u(n, k));
      const AffineExpr v = AffineExpr::var(out.v(n, k));
      if (box.a.fixed(m)) {
        const double a0 = box.a.lo[static_cast<std::size_t>(m)];
        zre[idx] = u * a0;
        zim[idx] = v * a0;
      } else {
        out.zr(m, k) = out.prog.add_var("zr" + std::to_string(m) + "_" + std::to_string(k));
        out.zi(m, k) = out.prog.add_var("zi" + std::to_string(m) + "_" + std::to_string(k));
        zre[idx] = AffineExpr::var(out.zr(m, k));
        zim[idx] = AffineExpr::var(out.zi(m, k));
        const Interval ba{0.0, 1.0};
        add_envelope(out.prog, zre[idx], out.a[static_cast<std::size_t>(m)], u, ba,
                     {box.re_lo(n, k) * inv, box.re_hi(n, k) * inv});
        add_envelope(out.prog, zim[idx], out.a[static_cast<std::size_t>(m)], v, ba,
                     {box.im_lo(n, k) * inv, box.im_hi(n, k) * inv});
      }
      out.prog.add_squared(zre[idx]);
      out.prog.add_squared(zim[idx]);
    }

  // amplitude of user k from beam j: sum_m E(m,k) z_{m,j}
  auto amplitude = [&](int k, int j, AffineExpr& re, AffineExpr& im) {
    for (int m = 0; m < M; ++m) {
      const double er = E(m, k).real();
      const double ei = E(m, k).imag();
      const auto idx = static_cast<std::size_t>(j * M + m);
      re += zre[idx] * er - zim[idx] * ei;
      im += zim[idx] * er + zre[idx] * ei;
    }
    re.compress();
    im.compress();
  };
  for (int k = 0; k < K; ++k) {
    AffineExpr sre;
    AffineExpr sim;
    amplitude(k, k, sre, sim);
    std::vector<AffineExpr> args;
    for (int j = 0; j < K; ++j) {
      if (j == k) continue;
      AffineExpr re;
      AffineExpr im;
      amplitude(k, j, re, im);
      args.push_back(re * rg);
      args.push_back(im * rg);
    }
    args.emplace_back(rg);
    out.prog.add_soc(sre, args);
    out.prog.add_eq(sim);
  }
  return out;
}

}  // namespace pass
