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

#include <array>
#include <stdexcept>
#include <utility>

#include "pass/conic.hpp"

namespace pass {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool is_point() const { return lo == hi; }
};

/// c_z z + c_x x + c_y y + c_0 >= 0
struct EnvelopeRow {
  double cz;
  double cx;
  double cy;
  double c0;
  double eval(double x, double y, double z) const { return cz * z + cx * x + cy * y + c0; }
};

/// Convex hull of {(x, y, xy)} over a box:
///   z >= lx y + x ly - lx ly,   z >= ux y + x uy - ux uy,
///   z <= ux y + x ly - ux ly,   z <= lx y + x uy - lx uy.
struct EnvelopeRows {
  Interval x;
  Interval y;
  std::array<EnvelopeRow, 4> rows;

  bool contains(double xv, double yv, double zv, double tol = 0.0) const {
    for (const auto& r : rows)
      if (r.eval(xv, yv, zv) < -tol) return false;
    return true;
  }

  /// Feasible z interval at (xv, yv).
  std::pair<double, double> z_range(double xv, double yv) const {
    const double lower = std::max(x.lo * yv + xv * y.lo - x.lo * y.lo, x.hi * yv + xv * y.hi - x.hi * y.hi);
    const double upper = std::min(x.hi * yv + xv * y.lo - x.hi * y.lo, x.lo * yv + xv * y.hi - x.lo * y.hi);
    return {lower, upper};
  }
};

inline EnvelopeRows mccormick(Interval x, Interval y) {
  if (!(x.lo <= x.hi) || !(y.lo <= y.hi)) throw std::invalid_argument("mccormick: inverted bounds");
  EnvelopeRows e;
  e.x = x;
  e.y = y;
  e.rows[0] = {1.0, -y.lo, -x.lo, x.lo * y.lo};
  e.rows[1] = {1.0, -y.hi, -x.hi, x.hi * y.hi};
  e.rows[2] = {-1.0, y.lo, x.hi, -x.hi * y.lo};
  e.rows[3] = {-1.0, y.hi, x.lo, -x.lo * y.hi};
  return e;
}

/// Appends the four envelope rows for z = x y to a conic program.
inline void add_envelope(socp::ConicProgram& prog, const socp::AffineExpr& z, const socp::AffineExpr& x,
                         const socp::AffineExpr& y, Interval bx, Interval by) {
  const EnvelopeRows e = mccormick(bx, by);
  for (const auto& r : e.rows) prog.add_ge(z * r.cz + x * r.cx + y * r.cy + socp::AffineExpr(r.c0));
}

}  // namespace pass
