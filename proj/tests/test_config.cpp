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

#include "pass/config.hpp"

using namespace pass;

TEST(Config, EmptyGivesSmallPreset) {
  const config::Config c = config::parse_string("");
  EXPECT_EQ(c.experiment.base.num_waveguides, 2);
  EXPECT_EQ(c.experiment.base.antennas_per_waveguide, 6);
  EXPECT_NEAR(c.experiment.base.sinr_min, 100.0, 1e-12);
  EXPECT_FALSE(c.has_sweep);
  EXPECT_DOUBLE_EQ(c.coupling.params.omega0, 0.33);
}

TEST(Config, AllSections) {
  const config::Config c = config::parse_string(
      "[scenario]\nnum_waveguides = 4\nnum_users = 2\nantennas_per_waveguide = 3\nspan_x = 15\n"
      "users = 1:2; 3.5:4\nsinr_db = 15\n"
      "[coupling]\nomega0 = 0.4\nalpha = 0.3\nactive = 101|11\ntargets = 0.5,0.5\nshape = circular\n"
      "[solver]\nepsilon = 1e-12\ncount_mode = equal\ntime_limit = 5\nmax_rounds = 7\n"
      "[experiment]\nsolvers = matching, baseline-mimo\nsweep = sinr_db=10,15\ntrials = 4\nseed = 3\n");
  const auto& e = c.experiment;
  EXPECT_EQ(e.base.num_waveguides, 4);
  EXPECT_EQ(e.base.waveguides.size(), 4u);
  EXPECT_DOUBLE_EQ(e.base.span_x, 15.0);
  ASSERT_EQ(e.base.user_positions.size(), 2u);
  EXPECT_DOUBLE_EQ(e.base.user_positions[1].x, 3.5);
  EXPECT_FALSE(e.random_users);
  EXPECT_DOUBLE_EQ(c.coupling.params.alpha, 0.3);
  EXPECT_EQ(c.coupling.active, "101|11");
  EXPECT_EQ(c.coupling.shape, coupling::Shape::Circular);
  EXPECT_EQ(c.coupling.targets.size(), 2u);
  EXPECT_EQ(e.settings.count_mode, CountMode::EqualCounts);
  EXPECT_EQ(e.settings.max_rounds, 7);
  EXPECT_EQ(e.solvers.size(), 2u);
  EXPECT_EQ(e.sweep_key, "sinr_db");
  EXPECT_EQ(e.sweep_values, (std::vector<double>{10.0, 15.0}));
  EXPECT_EQ(e.trials, 4);
  EXPECT_EQ(e.seed, 3u);
  EXPECT_TRUE(c.has_sweep);
}

TEST(Config, RejectsUnknownThings) {
  EXPECT_THROW(config::parse_string("[nope]\na = 1\n"), std::invalid_argument);
  EXPECT_THROW(config::parse_string("[solver]\nspeed = 1\n"), std::invalid_argument);
  EXPECT_THROW(config::parse_string("[scenario]\nheight = tall\n"), std::invalid_argument);
  EXPECT_THROW(config::parse_string("[experiment]\nsolvers = magic\n"), std::invalid_argument);
  EXPECT_THROW(config::parse_string("[scenario]\nnum_users = 3\nusers = 1:1\n"), std::invalid_argument);
  EXPECT_THROW(config::parse_string("[scenario\n"), std::invalid_argument);
}

TEST(Config, SweepSyntax) {
  ExperimentSpec spec;
  spec.base = paper_small_preset();
  config::apply_sweep(spec, "L=4,6,8");
  EXPECT_EQ(spec.sweep_key, "L");
  EXPECT_EQ(spec.sweep_values.size(), 3u);
  EXPECT_THROW(config::apply_sweep(spec, "L"), std::invalid_argument);
  EXPECT_THROW(config::apply_sweep(spec, "L=4,x"), std::invalid_argument);
  EXPECT_THROW(config::apply_sweep(spec, "L=2.5"), std::invalid_argument);
}
