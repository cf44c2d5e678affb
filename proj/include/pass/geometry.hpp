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

#include <vector>

#include <Eigen/Dense>

#include "pass/scenario.hpp"

namespace pass {

/// Antenna index convention: antenna l on waveguide n has flat index n*L + l.
struct Geometry {
  int num_waveguides = 0;
  int antennas_per_waveguide = 0;
  std::vector<Eigen::Vector3d> antenna_positions;  // size N*L
  std::vector<Eigen::Vector3d> feed_points;        // size N
  std::vector<Eigen::Vector3d> user_positions;     // size K
  double carrier_wavelength = 0.0;
  double guided_wavelength = 0.0;

  int flat(int l, int n) const { return n * antennas_per_waveguide + l; }
  double feed_distance(int l, int n) const {
    return (antenna_positions[static_cast<std::size_t>(flat(l, n))] -
            feed_points[static_cast<std::size_t>(n)])
        .norm();
  }
};

/// Offset of antenna l (0-based) along a span of the given length, cell-centred.
inline double grid_offset(double span, int l, int count) {
  return span * (static_cast<double>(l) + 0.5) / static_cast<double>(count);
}

inline Eigen::Vector3d point_on_waveguide(const WaveguideLayout& wg, double offset,
                                          double height) {
  if (wg.axis == Axis::ParallelX) return {wg.feed_x + offset, wg.feed_y, height};
  return {wg.feed_x, wg.feed_y + offset, height};
}

inline Geometry build_geometry(const Scenario& scenario) {
  scenario.validate();
  Geometry g;
  g.num_waveguides = scenario.num_waveguides;
  g.antennas_per_waveguide = scenario.antennas_per_waveguide;
  g.carrier_wavelength = scenario.carrier_wavelength();
  g.guided_wavelength = scenario.guided_wavelength();
  const int L = scenario.antennas_per_waveguide;
  g.antenna_positions.reserve(static_cast<std::size_t>(scenario.num_antennas()));
  for (const auto& wg : scenario.waveguides) {
    g.feed_points.emplace_back(wg.feed_x, wg.feed_y, scenario.height);
    const double span = scenario.span_of(wg);
    for (int l = 0; l < L; ++l)
      g.antenna_positions.push_back(point_on_waveguide(wg, grid_offset(span, l, L), scenario.height));
  }
  for (const auto& u : scenario.user_positions) g.user_positions.emplace_back(u.x, u.y, 0.0);
  return g;
}

}  // namespace pass
