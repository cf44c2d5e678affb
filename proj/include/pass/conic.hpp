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
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

// Small second-order-cone programming layer.
//
//   minimize    c'x + sum_i (f_i'x + f0_i)^2 + const
//   subject to  e(x) = 0,  e(x) >= 0,  ||(e_1(x), ..., e_r(x))|| <= e_0(x)
//
// solved with a homogeneous self-dual interior-point method using
// Nesterov-Todd scaling and a Mehrotra predictor-corrector step.

namespace pass::socp {

struct Term {
  int var;
  double coef;
};

/// Sparse affine function of the program variables.
class AffineExpr {
 public:
  AffineExpr() = default;
  AffineExpr(double constant) : constant(constant) {}  // NOLINT(google-explicit-constructor)

  static AffineExpr var(int index, double coef = 1.0) {
    AffineExpr e;
    e.terms.push_back({index, coef});
    return e;
  }

  AffineExpr& add(int index, double coef) {
    terms.push_back({index, coef});
    return *this;
  }

  AffineExpr& operator+=(const AffineExpr& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    constant += o.constant;
    return *this;
  }
  AffineExpr& operator-=(const AffineExpr& o) { return *this += o * -1.0; }
  AffineExpr& operator*=(double s) {
    for (auto& t : terms) t.coef *= s;
    constant *= s;
    return *this;
  }
  friend AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
  friend AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
  friend AffineExpr operator*(AffineExpr a, double s) { return a *= s; }
  friend AffineExpr operator*(double s, AffineExpr a) { return a *= s; }

  double eval(const Eigen::VectorXd& x) const {
    double v = constant;
    for (const auto& t : terms) v += t.coef * x(t.var);
    return v;
  }

  /// Sorts by variable, merges duplicates and drops exact zeros.
  void compress() {
    std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.var < b.var; });
    std::vector<Term> out;
    for (const auto& t : terms) {
      if (!out.empty() && out.back().var == t.var)
        out.back().coef += t.coef;
      else
        out.push_back(t);
    }
    out.erase(std::remove_if(out.begin(), out.end(), [](const Term& t) { return t.coef == 0.0; }),
              out.end());
    terms = std::move(out);
  }

  std::vector<Term> terms;
  double constant = 0.0;
};

struct SocBlock {
  AffineExpr bound;
  std::vector<AffineExpr> args;
};

/// A conic program in modelling form; also acts as its own builder.
struct ConicProgram {
  int num_vars = 0;
  std::vector<std::string> names;
  AffineExpr objective;             // linear part (+ constant)
  std::vector<AffineExpr> squared;  // objective += sum of squares
  std::vector<AffineExpr> equalities;
  std::vector<AffineExpr> inequalities;  // each >= 0
  std::vector<SocBlock> cones;

  int add_var(std::string name = {}) {
    names.push_back(name.empty() ? "x" + std::to_string(num_vars) : std::move(name));
    return num_vars++;
  }
  void add_eq(AffineExpr lhs, const AffineExpr& rhs = {}) {
    lhs -= rhs;
    lhs.compress();
    equalities.push_back(std::move(lhs));
  }
  void add_ge(AffineExpr lhs, const AffineExpr& rhs = {}) {
    lhs -= rhs;
    lhs.compress();
    inequalities.push_back(std::move(lhs));
  }
  void add_le(const AffineExpr& lhs, AffineExpr rhs) { add_ge(std::move(rhs), lhs); }
  /// ||args|| <= bound
  void add_soc(AffineExpr bound, std::vector<AffineExpr> args) {
    bound.compress();
    for (auto& a : args) a.compress();
    cones.push_back({std::move(bound), std::move(args)});
  }
  void add_squared(AffineExpr e) {
    e.compress();
    squared.push_back(std::move(e));
  }

  void validate() const {
    auto check = [&](const AffineExpr& e) {
      for (const auto& t : e.terms) {
        if (t.var < 0 || t.var >= num_vars)
          throw std::invalid_argument("conic program: variable index out of range");
        if (!std::isfinite(t.coef)) throw std::invalid_argument("conic program: non-finite coefficient");
      }
      if (!std::isfinite(e.constant)) throw std::invalid_argument("conic program: non-finite constant");
    };
    check(objective);
    for (const auto& e : squared) check(e);
    for (const auto& e : equalities) check(e);
    for (const auto& e : inequalities) check(e);
    for (const auto& c : cones) {
      check(c.bound);
      for (const auto& a : c.args) check(a);
    }
  }

  double objective_value(const Eigen::VectorXd& x) const {
    double v = objective.eval(x);
    for (const auto& e : squared) {
      const double r = e.eval(x);
      v += r * r;
    }
    return v;
  }

  /// Largest violation of any constraint at x (0 when feasible).
  double max_violation(const Eigen::VectorXd& x) const {
    double worst = 0.0;
    for (const auto& e : equalities) worst = std::max(worst, std::abs(e.eval(x)));
    for (const auto& e : inequalities) worst = std::max(worst, -e.eval(x));
    for (const auto& c : cones) {
      double nrm = 0.0;
      for (const auto& a : c.args) nrm += std::pow(a.eval(x), 2);
      worst = std::max(worst, std::sqrt(nrm) - c.bound.eval(x));
    }
    return worst;
  }
};

enum class Status { Optimal, Infeasible, Unbounded, NumericalFailure };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::NumericalFailure: return "numerical-failure";
  }
  return "?";
}

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 200;
  double step = 0.99;
  std::ostream* log = nullptr;  // per-iteration residuals when set
};

struct SolveReport {
  Status status = Status::NumericalFailure;
  double objective = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd x;
  Eigen::VectorXd eq_duals;    // one per equality row
  Eigen::VectorXd cone_duals;  // stacked: inequalities, then cone blocks, then the objective cone
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  double achieved = 0.0;  // max of the residuals and the smaller of absolute/relative gap
};

namespace detail {

using Row = std::vector<std::pair<int, double>>;

struct StandardForm {
  int n = 0;
  int num_lp = 0;
  std::vector<int> soc_dims;
  std::vector<Row> A;
  Eigen::VectorXd b;
  std::vector<Row> G;
  Eigen::VectorXd h;
  Eigen::VectorXd c;
  std::vector<double> a_scale;
  std::vector<double> g_scale;
  bool trivially_infeasible = false;
};

inline Eigen::VectorXd mul(const std::vector<Row>& rows, const Eigen::VectorXd& x) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double v = 0.0;
    for (const auto& [j, a] : rows[i]) v += a * x(j);
    out(static_cast<Eigen::Index>(i)) = v;
  }
  return out;
}

inline Eigen::VectorXd mul_t(const std::vector<Row>& rows, const Eigen::VectorXd& y, int n) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double yi = y(static_cast<Eigen::Index>(i));
    if (yi == 0.0) continue;
    for (const auto& [j, a] : rows[i]) out(j) += a * yi;
  }
  return out;
}

inline Row negated(const AffineExpr& e) {
  Row r;
  r.reserve(e.terms.size());
  for (const auto& t : e.terms) r.emplace_back(t.var, -t.coef);
  return r;
}

inline double row_norm(const Row& r) {
  double s = 0.0;
  for (const auto& [j, a] : r) s += a * a;
  return std::sqrt(s);
}

inline StandardForm to_standard(const ConicProgram& prog) {
  StandardForm sf;
  const bool has_sq = !prog.squared.empty();
  sf.n = prog.num_vars + (has_sq ? 1 : 0);
  sf.c = Eigen::VectorXd::Zero(sf.n);
  AffineExpr obj = prog.objective;
  obj.compress();
  for (const auto& t : obj.terms) sf.c(t.var) += t.coef;
  if (has_sq) sf.c(prog.num_vars) = 1.0;

  std::vector<double> b;
  for (const auto& e : prog.equalities) {
    if (e.terms.empty()) {
      if (std::abs(e.constant) > 1e-12) sf.trivially_infeasible = true;
      sf.A.emplace_back();
      b.push_back(0.0);
      continue;
    }
    Row r;
    for (const auto& t : e.terms) r.emplace_back(t.var, t.coef);
    sf.A.push_back(std::move(r));
    b.push_back(-e.constant);
  }

  std::vector<double> h;
  for (const auto& e : prog.inequalities) {
    if (e.terms.empty() && e.constant < -1e-12) sf.trivially_infeasible = true;
    sf.G.push_back(negated(e));
    h.push_back(e.constant);
  }
  sf.num_lp = static_cast<int>(prog.inequalities.size());
  for (const auto& cone : prog.cones) {
    sf.G.push_back(negated(cone.bound));
    h.push_back(cone.bound.constant);
    for (const auto& a : cone.args) {
      sf.G.push_back(negated(a));
      h.push_back(a.constant);
    }
    sf.soc_dims.push_back(static_cast<int>(cone.args.size()) + 1);
  }
  if (has_sq && obj.terms.empty()) {
    // Pure sum of squares: minimising the norm has the same minimiser and a far
    // better conditioned cone than the rotated epigraph.
    const int t = prog.num_vars;
    sf.G.push_back({{t, -1.0}});
    h.push_back(0.0);
    for (const auto& e : prog.squared) {
      sf.G.push_back(negated(e));
      h.push_back(e.constant);
    }
    sf.soc_dims.push_back(static_cast<int>(prog.squared.size()) + 1);
  } else if (has_sq) {
    // ||(f, (t-1)/2)|| <= (t+1)/2  <=>  ||f||^2 <= t
    const int t = prog.num_vars;
    sf.G.push_back({{t, -0.5}});
    h.push_back(0.5);
    for (const auto& e : prog.squared) {
      sf.G.push_back(negated(e));
      h.push_back(e.constant);
    }
    sf.G.push_back({{t, -0.5}});
    h.push_back(-0.5);
    sf.soc_dims.push_back(static_cast<int>(prog.squared.size()) + 2);
  }
  sf.b = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  sf.h = Eigen::Map<Eigen::VectorXd>(h.data(), static_cast<Eigen::Index>(h.size()));

  // Row equilibration: equality rows individually, cone blocks as a whole.
  sf.a_scale.assign(sf.A.size(), 1.0);
  for (std::size_t i = 0; i < sf.A.size(); ++i) {
    const double nr = row_norm(sf.A[i]);
    if (nr > 0.0) {
      sf.a_scale[i] = 1.0 / nr;
      for (auto& [j, a] : sf.A[i]) a /= nr;
      sf.b(static_cast<Eigen::Index>(i)) /= nr;
    }
  }
  // Drop empty equality rows (already checked above).
  {
    std::vector<Row> keepA;
    std::vector<double> keepb;
    std::vector<double> keeps;
    for (std::size_t i = 0; i < sf.A.size(); ++i) {
      if (sf.A[i].empty()) {
        keeps.push_back(0.0);
        continue;
      }
      keepA.push_back(sf.A[i]);
      keepb.push_back(sf.b(static_cast<Eigen::Index>(i)));
      keeps.push_back(sf.a_scale[i]);
    }
    sf.A = std::move(keepA);
    sf.b = Eigen::Map<Eigen::VectorXd>(keepb.data(), static_cast<Eigen::Index>(keepb.size()));
    sf.a_scale = std::move(keeps);  // zero marks a dropped row
  }
  sf.g_scale.assign(sf.G.size(), 1.0);
  auto scale_block = [&](std::size_t begin, std::size_t end) {
    double nr = 0.0;
    for (std::size_t i = begin; i < end; ++i) nr = std::max(nr, row_norm(sf.G[i]));
    if (!(nr > 0.0)) return;
    for (std::size_t i = begin; i < end; ++i) {
      for (auto& [j, a] : sf.G[i]) a /= nr;
      sf.h(static_cast<Eigen::Index>(i)) /= nr;
      sf.g_scale[i] = 1.0 / nr;
    }
  };
  for (int i = 0; i < sf.num_lp; ++i) scale_block(static_cast<std::size_t>(i), static_cast<std::size_t>(i) + 1);
  std::size_t off = static_cast<std::size_t>(sf.num_lp);
  for (int d : sf.soc_dims) {
    scale_block(off, off + static_cast<std::size_t>(d));
    off += static_cast<std::size_t>(d);
  }
  return sf;
}

// ---------------------------------------------------------------------------
// Cone algebra on R+^l x Q^{q1} x ... (a vector stacks the LP part then each block)

struct Cones {
  int l = 0;
  std::vector<int> q;
  std::vector<int> start;

  Cones(int lp, std::vector<int> dims) : l(lp), q(std::move(dims)) {
    int off = l;
    for (int d : q) {
      start.push_back(off);
      off += d;
    }
  }
  int degree() const { return l + static_cast<int>(q.size()); }

  Eigen::VectorXd identity(Eigen::Index m) const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    e.head(l).setOnes();
    for (int s : start) e(s) = 1.0;
    return e;
  }

  /// Smallest t with v + t e on the cone boundary (negative when v is interior).
  double boundary_shift(const Eigen::VectorXd& v) const {
    double t = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < l; ++i) t = std::max(t, -v(i));
    for (std::size_t c = 0; c < q.size(); ++c)
      t = std::max(t, v.segment(start[c] + 1, q[c] - 1).norm() - v(start[c]));
    return t;
  }

  bool interior(const Eigen::VectorXd& v) const { return boundary_shift(v) < 0.0; }

  Eigen::VectorXd product(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    Eigen::VectorXd out(x.size());
    out.head(l) = x.head(l).cwiseProduct(y.head(l));
    for (std::size_t c = 0; c < q.size(); ++c) {
      const int s = start[c];
      const int d = q[c];
      out(s) = x.segment(s, d).dot(y.segment(s, d));
      out.segment(s + 1, d - 1) = x(s) * y.segment(s + 1, d - 1) + y(s) * x.segment(s + 1, d - 1);
    }
    return out;
  }

  /// Solves lambda o x = r.
  Eigen::VectorXd divide(const Eigen::VectorXd& lambda, const Eigen::VectorXd& r) const {
    Eigen::VectorXd out(r.size());
    out.head(l) = r.head(l).cwiseQuotient(lambda.head(l));
    for (std::size_t c = 0; c < q.size(); ++c) {
      const int s = start[c];
      const int d = q[c];
      const double l0 = lambda(s);
      const auto l1 = lambda.segment(s + 1, d - 1);
      const double det = l0 * l0 - l1.squaredNorm();
      const double x0 = (l0 * r(s) - l1.dot(r.segment(s + 1, d - 1))) / det;
      out(s) = x0;
      out.segment(s + 1, d - 1) = (r.segment(s + 1, d - 1) - x0 * l1) / l0;
    }
    return out;
  }

  /// Largest alpha with x + alpha d in the cone (x interior); +inf if unbounded.
  double max_step(const Eigen::VectorXd& x, const Eigen::VectorXd& d) const {
    double alpha = std::numeric_limits<double>::infinity();
    for (int i = 0; i < l; ++i)
      if (d(i) < 0.0) alpha = std::min(alpha, -x(i) / d(i));
    for (std::size_t c = 0; c < q.size(); ++c) {
      const int s = start[c];
      const int k = q[c] - 1;
      const double d0 = d(s);
      const double x0 = x(s);
      const auto d1 = d.segment(s + 1, k);
      const auto x1 = x.segment(s + 1, k);
      const double a = d0 * d0 - d1.squaredNorm();
      const double b = x0 * d0 - x1.dot(d1);
      const double cc = x0 * x0 - x1.squaredNorm();
      if (a >= 0.0 && d0 >= 0.0) continue;
      const double disc = std::max(0.0, b * b - a * cc);
      const double den = -b + std::sqrt(disc);
      if (den > 0.0) alpha = std::min(alpha, cc / den);
      else alpha = 0.0;
    }
    return alpha;
  }
};

/// Nesterov-Todd scaling W (symmetric) with W z = W^{-1} s = lambda.
struct Scaling {
  const Cones* cones = nullptr;
  Eigen::VectorXd w;                 // LP part: sqrt(s/z)
  std::vector<double> eta;           // SOC part
  std::vector<Eigen::VectorXd> wbar; // hyperbolic unit vectors

  static Scaling identity(const Cones& k) {
    Scaling sc;
    sc.cones = &k;
    sc.w = Eigen::VectorXd::Ones(k.l);
    for (int d : k.q) {
      sc.eta.push_back(1.0);
      Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
      v(0) = 1.0;
      sc.wbar.push_back(v);
    }
    return sc;
  }

  static Scaling compute(const Cones& k, const Eigen::VectorXd& s, const Eigen::VectorXd& z) {
    Scaling sc;
    sc.cones = &k;
    sc.w = s.head(k.l).cwiseQuotient(z.head(k.l)).cwiseSqrt();
    for (std::size_t c = 0; c < k.q.size(); ++c) {
      const int st = k.start[c];
      const int d = k.q[c];
      const Eigen::VectorXd sv = s.segment(st, d);
      const Eigen::VectorXd zv = z.segment(st, d);
      const double sres = sv(0) * sv(0) - sv.tail(d - 1).squaredNorm();
      const double zres = zv(0) * zv(0) - zv.tail(d - 1).squaredNorm();
      const double sn = std::sqrt(sres);
      const double zn = std::sqrt(zres);
      const Eigen::VectorXd sb = sv / sn;
      const Eigen::VectorXd zb = zv / zn;
      const double gamma = std::sqrt((1.0 + sb.dot(zb)) / 2.0);
      Eigen::VectorXd wb(d);
      wb(0) = (sb(0) + zb(0)) / (2.0 * gamma);
      wb.tail(d - 1) = (sb.tail(d - 1) - zb.tail(d - 1)) / (2.0 * gamma);
      // Renormalise so that wb0^2 - |wb1|^2 = 1 holds to rounding.
      wb(0) = std::sqrt(1.0 + wb.tail(d - 1).squaredNorm());
      sc.eta.push_back(std::sqrt(sn / zn));
      sc.wbar.push_back(wb);
    }
    return sc;
  }

  /// power in {1, -1}
  Eigen::VectorXd apply(const Eigen::VectorXd& v, int power) const {
    Eigen::VectorXd out(v.size());
    const int l = cones->l;
    if (power > 0)
      out.head(l) = v.head(l).cwiseProduct(w);
    else
      out.head(l) = v.head(l).cwiseQuotient(w);
    for (std::size_t c = 0; c < cones->q.size(); ++c) {
      const int st = cones->start[c];
      const int d = cones->q[c];
      const double a = wbar[c](0);
      const auto qv = wbar[c].tail(d - 1);
      const double v0 = v(st);
      const auto v1 = v.segment(st + 1, d - 1);
      const double qv1 = qv.dot(v1);
      const double sgn = power > 0 ? 1.0 : -1.0;
      const double f = power > 0 ? eta[c] : 1.0 / eta[c];
      out(st) = f * (a * v0 + sgn * qv1);
      out.segment(st + 1, d - 1) = f * (v1 + (sgn * v0 + qv1 / (1.0 + a)) * qv);
    }
    return out;
  }

  Eigen::VectorXd apply2(const Eigen::VectorXd& v, int power) const {
    return apply(apply(v, power), power);
  }
};

/// Factorization of the reduced KKT system for
///   [0 A' G'; A 0 0; G 0 -W^2] [x; y; z] = [r1; r2; r3].
class KktSolver {
 public:
  KktSolver(const StandardForm& sf, const Cones& k) : sf_(sf), k_(k) {}

  void factor(const Scaling& W) {
    W_ = &W;
    const int n = sf_.n;
    const int p = static_cast<int>(sf_.A.size());
    Eigen::MatrixXd Hm = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < k_.l; ++i) {
      const double d = 1.0 / (W.w(i) * W.w(i));
      const auto& row = sf_.G[static_cast<std::size_t>(i)];
      for (const auto& [a, ga] : row)
        for (const auto& [b, gb] : row) Hm(a, b) += d * ga * gb;
    }
    Eigen::VectorXd g(n);
    for (std::size_t c = 0; c < k_.q.size(); ++c) {
      const int st = k_.start[c];
      const int d = k_.q[c];
      const double inv_eta2 = 1.0 / (W.eta[c] * W.eta[c]);
      g.setZero();
      for (int r = 0; r < d; ++r) {
        const double vr = r == 0 ? W.wbar[c](0) : -W.wbar[c](r);
        const double jr = r == 0 ? 1.0 : -1.0;
        const auto& row = sf_.G[static_cast<std::size_t>(st + r)];
        for (const auto& [a, ga] : row) {
          g(a) += vr * ga;
          for (const auto& [b, gb] : row) Hm(a, b) -= inv_eta2 * jr * ga * gb;
        }
      }
      Hm.noalias() += (2.0 * inv_eta2) * g * g.transpose();
    }
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + p, n + p);
    K.topLeftCorner(n, n) = Hm;
    K.topLeftCorner(n, n).diagonal().array() += kStaticReg;
    for (int i = 0; i < p; ++i) {
      for (const auto& [j, a] : sf_.A[static_cast<std::size_t>(i)]) {
        K(n + i, j) = a;
        K(j, n + i) = a;
      }
      K(n + i, n + i) = -kStaticReg;
    }
    lu_.compute(K);
  }

  struct Vec3 {
    Eigen::VectorXd x, y, z;
  };

  Vec3 solve(const Vec3& r) const {
    Vec3 u = solve_once(r);
    for (int it = 0; it < 10; ++it) {
      Vec3 e = residual(r, u);
      const double en = std::max({inf_norm(e.x), inf_norm(e.y), inf_norm(e.z)});
      const double rn = std::max({inf_norm(r.x), inf_norm(r.y), inf_norm(r.z)});
      if (!(en > 1e-14 * (1.0 + rn))) break;
      Vec3 du = solve_once(e);
      u.x += du.x;
      u.y += du.y;
      u.z += du.z;
    }
    return u;
  }

 private:
  static double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

  Vec3 solve_once(const Vec3& r) const {
    const int n = sf_.n;
    const int p = static_cast<int>(sf_.A.size());
    Eigen::VectorXd rhs(n + p);
    rhs.head(n) = r.x + mul_t(sf_.G, W_->apply2(r.z, -1), n);
    rhs.tail(p) = r.y;
    const Eigen::VectorXd sol = lu_.solve(rhs);
    Vec3 u;
    u.x = sol.head(n);
    u.y = sol.tail(p);
    u.z = W_->apply2(mul(sf_.G, u.x) - r.z, -1);
    return u;
  }

  Vec3 residual(const Vec3& r, const Vec3& u) const {
    Vec3 e;
    e.x = r.x - mul_t(sf_.A, u.y, sf_.n) - mul_t(sf_.G, u.z, sf_.n);
    e.y = r.y - mul(sf_.A, u.x);
    e.z = r.z - (mul(sf_.G, u.x) - W_->apply2(u.z, 1));
    return e;
  }

  static constexpr double kStaticReg = 1e-10;

  const StandardForm& sf_;
  const Cones& k_;
  const Scaling* W_ = nullptr;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

inline SolveReport solve_standard(const StandardForm& sf, const SolverOptions& opt) {
  SolveReport rep;
  const int n = sf.n;
  const auto m = static_cast<Eigen::Index>(sf.G.size());
  const auto p = static_cast<Eigen::Index>(sf.A.size());
  const Cones cones(sf.num_lp, sf.soc_dims);
  const Eigen::VectorXd e = cones.identity(m);
  KktSolver kkt(sf, cones);
  using Vec3 = KktSolver::Vec3;

  // Initial point from two least-squares solves with W = I.
  Scaling W = Scaling::identity(cones);
  kkt.factor(W);
  Vec3 prim = kkt.solve({Eigen::VectorXd::Zero(n), sf.b, sf.h});
  Vec3 dual = kkt.solve({-sf.c, Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(m)});
  Eigen::VectorXd x = prim.x;
  Eigen::VectorXd s = -prim.z;
  Eigen::VectorXd y = dual.y;
  Eigen::VectorXd z = dual.z;
  {
    const double as = cones.boundary_shift(s);
    if (as >= -1e-8) s += (1.0 + std::max(as, 0.0)) * e;
    const double az = cones.boundary_shift(z);
    if (az >= -1e-8) z += (1.0 + std::max(az, 0.0)) * e;
  }
  double tau = 1.0;
  double kappa = 1.0;

  Eigen::VectorXd bh(p + m);
  bh << sf.b, sf.h;
  const double bh_norm = std::max(1.0, bh.norm());
  const double c_norm = std::max(1.0, sf.c.norm());
  const int degree = cones.degree();

  struct Snapshot {
    double achieved = std::numeric_limits<double>::infinity();
    double pres = 0.0, dres = 0.0, gap = 0.0;
    Eigen::VectorXd x, y, z;
  } best;

  auto finish = [&](Status st) {
    rep.status = st;
    if (st == Status::Infeasible || st == Status::Unbounded) {
      rep.x = x;
      rep.eq_duals = y;
      rep.cone_duals = z;
    } else if (st == Status::NumericalFailure && best.x.size() > 0) {
      rep.x = best.x;
      rep.eq_duals = best.y;
      rep.cone_duals = best.z;
      rep.achieved = best.achieved;
      rep.primal_residual = best.pres;
      rep.dual_residual = best.dres;
      rep.gap = best.gap;
    } else {
      rep.x = x / tau;
      rep.eq_duals = y / tau;
      rep.cone_duals = z / tau;
    }
    return rep;
  };

  for (int it = 0; it <= opt.max_iter; ++it) {
    rep.iterations = it;
    const Eigen::VectorXd Aty = mul_t(sf.A, y, n);
    const Eigen::VectorXd Gtz = mul_t(sf.G, z, n);
    const Eigen::VectorXd Ax = mul(sf.A, x);
    const Eigen::VectorXd Gx = mul(sf.G, x);
    const Eigen::VectorXd rx = Aty + Gtz + sf.c * tau;
    const Eigen::VectorXd ry = Ax - sf.b * tau;
    const Eigen::VectorXd rz = Gx + s - sf.h * tau;
    const double cx = sf.c.dot(x);
    const double by_hz = sf.b.dot(y) + sf.h.dot(z);
    const double rt = kappa + cx + by_hz;

    const double pres = std::sqrt(ry.squaredNorm() + rz.squaredNorm()) / tau / bh_norm;
    const double dres = rx.norm() / tau / c_norm;
    const double pcost = cx / tau;
    const double dcost = -by_hz / tau;
    const double gap = s.dot(z) / (tau * tau);
    double relgap = std::numeric_limits<double>::infinity();
    if (pcost < 0.0) relgap = gap / -pcost;
    else if (dcost > 0.0) relgap = gap / dcost;
    rep.primal_residual = pres;
    rep.dual_residual = dres;
    rep.gap = gap;
    rep.achieved = std::max({pres, dres, std::min(gap, relgap)});
    if (opt.log)
      *opt.log << "it " << it << " pcost " << pcost << " dcost " << dcost << " gap " << gap
               << " pres " << pres << " dres " << dres << " tau " << tau << " kappa " << kappa << '\n';
    if (!std::isfinite(rep.achieved)) return finish(Status::NumericalFailure);
    if (rep.achieved < best.achieved) {
      best.achieved = rep.achieved;
      best.pres = pres;
      best.dres = dres;
      best.gap = gap;
      best.x = x / tau;
      best.y = y / tau;
      best.z = z / tau;
    }

    if (pres <= opt.tol && dres <= opt.tol && (gap <= opt.tol || relgap <= opt.tol))
      return finish(Status::Optimal);
    if (by_hz < 0.0 && tau < kappa) {
      const double pinf = (Aty + Gtz).norm() / -by_hz;
      if (pinf <= opt.tol) return finish(Status::Infeasible);
    }
    if (cx < 0.0 && tau < kappa) {
      const double dinf = std::sqrt(Ax.squaredNorm() + (Gx + s).squaredNorm()) / -cx;
      if (dinf <= opt.tol) return finish(Status::Unbounded);
    }
    if (it == opt.max_iter) break;

    if (!cones.interior(s) || !cones.interior(z)) {
      if (opt.log) *opt.log << "   iterate left the cone\n";
      return finish(Status::NumericalFailure);
    }
    W = Scaling::compute(cones, s, z);
    const Eigen::VectorXd lambda = W.apply(z, 1);
    const double mu = (s.dot(z) + tau * kappa) / (degree + 1);
    kkt.factor(W);

    const Vec3 u1 = kkt.solve({-sf.c, sf.b, sf.h});
    const double qu1 = sf.c.dot(u1.x) + sf.b.dot(u1.y) + sf.h.dot(u1.z);

    struct Dir {
      Eigen::VectorXd dx, dy, dz, ds;
      double dtau, dkappa;
    };
    auto direction = [&](double eta, const Eigen::VectorXd& psi, double psi_tau) {
      const Vec3 u0 = kkt.solve({-eta * rx, -eta * ry, -eta * rz - W.apply(psi, 1)});
      const double qu0 = sf.c.dot(u0.x) + sf.b.dot(u0.y) + sf.h.dot(u0.z);
      Dir d;
      d.dtau = (-eta * rt - psi_tau / tau - qu0) / (qu1 - kappa / tau);
      d.dx = u0.x + d.dtau * u1.x;
      d.dy = u0.y + d.dtau * u1.y;
      d.dz = u0.z + d.dtau * u1.z;
      d.ds = W.apply(psi - W.apply(d.dz, 1), 1);
      d.dkappa = (psi_tau - kappa * d.dtau) / tau;
      return d;
    };
    auto max_step = [&](const Dir& d) {
      double a = std::min(cones.max_step(s, d.ds), cones.max_step(z, d.dz));
      if (d.dtau < 0.0) a = std::min(a, -tau / d.dtau);
      if (d.dkappa < 0.0) a = std::min(a, -kappa / d.dkappa);
      return a;
    };

    const Dir aff = direction(1.0, -lambda, -tau * kappa);
    const double a_aff = std::min(1.0, max_step(aff));
    const double sigma = std::clamp(std::pow(1.0 - a_aff, 3), 0.0, 1.0);
    const Eigen::VectorXd ds_t = W.apply(aff.ds, -1);
    const Eigen::VectorXd dz_t = W.apply(aff.dz, 1);
    const Eigen::VectorXd target =
        sigma * mu * e - cones.product(lambda, lambda) - cones.product(ds_t, dz_t);
    const Eigen::VectorXd psi = cones.divide(lambda, target);
    const double psi_tau = sigma * mu - tau * kappa - aff.dtau * aff.dkappa;
    const Dir d = direction(1.0 - sigma, psi, psi_tau);
    const double alpha = std::min(1.0, opt.step * max_step(d));
    if (opt.log) *opt.log << "   alpha_aff " << a_aff << " sigma " << sigma << " alpha " << alpha << '\n';
    if (!(alpha > 1e-14) || !std::isfinite(alpha)) return finish(Status::NumericalFailure);

    x += alpha * d.dx;
    y += alpha * d.dy;
    z += alpha * d.dz;
    s += alpha * d.ds;
    tau += alpha * d.dtau;
    kappa += alpha * d.dkappa;
  }
  return finish(Status::NumericalFailure);
}

}  // namespace detail

/// Solves prog. Status Optimal guarantees primal/dual residuals and the gap below tol
/// in the solver's internally equilibrated units.
inline SolveReport solve_conic(const ConicProgram& prog, const SolverOptions& opt = {}) {
  prog.validate();
  const detail::StandardForm sf = detail::to_standard(prog);
  SolveReport rep;
  if (sf.trivially_infeasible) {
    rep.status = Status::Infeasible;
    rep.objective = std::numeric_limits<double>::infinity();
    rep.x = Eigen::VectorXd::Zero(prog.num_vars);
    return rep;
  }
  if (sf.n == 0) {
    // Nothing to optimise: every row is a constant.
    rep.x = Eigen::VectorXd::Zero(0);
    rep.status = prog.max_violation(rep.x) <= 1e-12 ? Status::Optimal : Status::Infeasible;
    rep.objective = rep.status == Status::Optimal ? prog.objective_value(rep.x)
                                                  : std::numeric_limits<double>::infinity();
    return rep;
  }
  rep = detail::solve_standard(sf, opt);
  if (rep.status == Status::Optimal || rep.status == Status::NumericalFailure) {
    // Undo row equilibration on the multipliers; objective is evaluated exactly.
    Eigen::VectorXd full_eq = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sf.a_scale.size()));
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < sf.a_scale.size(); ++i)
      if (sf.a_scale[i] != 0.0) full_eq(static_cast<Eigen::Index>(i)) = rep.eq_duals(k++) * sf.a_scale[i];
    rep.eq_duals = full_eq;
    for (std::size_t i = 0; i < sf.g_scale.size(); ++i)
      rep.cone_duals(static_cast<Eigen::Index>(i)) *= sf.g_scale[i];
    rep.x.conservativeResize(prog.num_vars);
    rep.objective = prog.objective_value(rep.x);
  } else if (rep.status == Status::Infeasible) {
    rep.objective = std::numeric_limits<double>::infinity();
    rep.x = Eigen::VectorXd::Zero(prog.num_vars);
  } else {
    rep.objective = -std::numeric_limits<double>::infinity();
    rep.x.conservativeResize(prog.num_vars);
  }
  return rep;
}

inline SolveReport solve_conic(const ConicProgram& prog, double tol) {
  SolverOptions o;
  o.tol = tol;
  return solve_conic(prog, o);
}

/// Plain-text dump: one line per objective term, row and cone.
inline void write_program(std::ostream& os, const ConicProgram& prog) {
  auto expr = [&](const AffineExpr& e) {
    os << e.constant;
    for (const auto& t : e.terms) os << ' ' << t.coef << '*' << prog.names[static_cast<std::size_t>(t.var)];
  };
  os << "VARS " << prog.num_vars;
  for (const auto& n : prog.names) os << ' ' << n;
  os << "\nMIN ";
  expr(prog.objective);
  os << '\n';
  for (const auto& e : prog.squared) { os << "SQ "; expr(e); os << '\n'; }
  for (const auto& e : prog.equalities) { os << "EQ "; expr(e); os << '\n'; }
  for (const auto& e : prog.inequalities) { os << "GE "; expr(e); os << '\n'; }
  for (const auto& c : prog.cones) {
    os << "SOC " << c.args.size() << "\n  BOUND ";
    expr(c.bound);
    os << '\n';
    for (const auto& a : c.args) { os << "  ARG "; expr(a); os << '\n'; }
  }
}

}  // namespace pass::socp
