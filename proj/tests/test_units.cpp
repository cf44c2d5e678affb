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

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "pass/geometry.hpp"
#include "pass/scenario.hpp"
#include "pass/units.hpp"

using namespace pass;

TEST(Units, DbmRoundTrip) {
  for (double dbm : {-80.0, -23.4, 0.0, 30.0, 46.5}) {
    const double w = dbm_to_watts(dbm);
    EXPECT_NEAR(watts_to_dbm(w), dbm, 1e-12 * std::max(1.0, std::abs(dbm)));
  }
  EXPECT_DOUBLE_EQ(dbm_to_watts(0.0), 1e-3);
  EXPECT_NEAR(dbm_to_watts(-80.0), 1e-11, 1e-24);
  for (double w : {1e-12, 3.3e-6, 0.5, 2.0})
    EXPECT_NEAR(dbm_to_watts(watts_to_dbm(w)) / w, 1.0, 1e-12);
}

TEST(Units, DbLinear) {
  EXPECT_DOUBLE_EQ(db_to_linear(20.0), 100.0);
  EXPECT_NEAR(linear_to_db(db_to_linear(13.7)), 13.7, 1e-12);
}

TEST(Scenario, SmallPresetValidatesOnceUsersAreSet) {
  Scenario s = paper_small_preset();
  EXPECT_THROW(s.validate(), std::invalid_argument);
  TrialStream ts(1, 0);
  s.user_positions = random_users(s.num_users, s.span_x, s.span_y, ts);
  EXPECT_NO_THROW(s.validate());
  EXPECT_EQ(s.num_antennas(), 12);
  EXPECT_NEAR(s.carrier_wavelength(), 0.02, 1e-15);
  EXPECT_NEAR(s.guided_wavelength(), 0.02 / 1.4, 1e-15);
}

TEST(Scenario, RejectsBadFields) {
  Scenario s = paper_small_preset();
  s.user_positions = {{1, 1}, {2, 2}};
  Scenario t = s;
  t.height = 0.0;
  EXPECT_THROW(t.validate(), std::invalid_argument);
  t = s;
  t.sinr_min = -1.0;
  EXPECT_THROW(t.validate(), std::invalid_argument);
  t = s;
  t.num_waveguides = 3;
  EXPECT_THROW(t.validate(), std::invalid_argument);
}

TEST(Layout, TwoAndFourWaveguides) {
  const auto two = default_layout(2, 10.0, 10.0);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0].axis, Axis::ParallelX);
  EXPECT_DOUBLE_EQ(two[0].feed_y, 5.0);
  EXPECT_DOUBLE_EQ(two[1].feed_y, 10.0);
  const auto four = default_layout(4, 10.0, 10.0);
  ASSERT_EQ(four.size(), 4u);
  EXPECT_EQ(four[2].axis, Axis::ParallelY);
  EXPECT_DOUBLE_EQ(four[2].feed_x, 0.0);
  EXPECT_DOUBLE_EQ(four[3].feed_x, 5.0);
  EXPECT_DOUBLE_EQ(four[3].feed_y, 0.0);
}

TEST(TrialStream, DeterministicAndIndependent) {
  TrialStream a(7, 3), b(7, 3), c(7, 4);
  std::set<double> seen;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
    seen.insert(x);
  }
  EXPECT_EQ(seen.size(), 100u);
  TrialStream d(7, 3);
  EXPECT_NE(d.uniform(), c.uniform());
}

TEST(Geometry, AntennaPositionsAreCellCentred) {
  Scenario s = paper_small_preset();
  s.user_positions = {{1, 1}, {2, 2}};
  const Geometry g = build_geometry(s);
  ASSERT_EQ(g.antenna_positions.size(), 12u);
  EXPECT_NEAR(g.antenna_positions[0].x(), 10.0 / 12.0, 1e-12);
  EXPECT_NEAR(g.antenna_positions[5].x(), 10.0 * 5.5 / 6.0, 1e-12);
  EXPECT_NEAR(g.antenna_positions[6].y(), 10.0, 1e-12);
  EXPECT_NEAR(g.antenna_positions[6].z(), 5.0, 1e-12);
  EXPECT_NEAR(g.feed_distance(2, 1), 10.0 * 2.5 / 6.0, 1e-12);
  EXPECT_DOUBLE_EQ(grid_offset(4.0, 0, 1), 2.0);
}
