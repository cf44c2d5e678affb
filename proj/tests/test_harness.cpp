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
#include <sstream>

#include "pass/harness.hpp"
#include "pass/io.hpp"

using namespace pass;

namespace {

Scenario with_users(std::vector<Point2> users) {
  Scenario s = paper_small_preset();
  s.num_users = static_cast<int>(users.size());
  s.user_positions = std::move(users);
  return s;
}

}  // namespace

TEST(Baseline, SingleUserIsMrt) {
  const Scenario s = with_users({{4.0, 3.0}});
  const FixedSolve f = baseline_mimo(s);
  ASSERT_TRUE(f.feasible);
  const double d = std::sqrt(16.0 + 9.0 + 25.0);
  const double gain = reference_gain(s.carrier_freq) / (d * d);
  EXPECT_NEAR(f.power / (s.noise_power * s.sinr_min / gain), 1.0, 1e-7);
}

TEST(Baseline, FarUsersNeedMorePower) {
  const double near = baseline_mimo(with_users({{1.0, 1.0}})).power;
  const double far = baseline_mimo(with_users({{9.0, 9.0}})).power;
  EXPECT_GT(far, near);
  const FixedSolve two = baseline_mimo(with_users({{2.0, 3.0}, {8.0, 6.0}}));
  EXPECT_TRUE(two.feasible);
}

TEST(ContinuousGrid, SinglePointGridIsMidpoint) {
  Scenario s = with_users({{3.0, 4.0}, {7.0, 9.0}});
  const ContinuousResult r = continuous_grid_search(s, {1, 1}, 1, 3);
  for (const auto& o : r.offsets) EXPECT_DOUBLE_EQ(o[0], 5.0);
}

TEST(ContinuousGrid, SingleAntennaSitsAboveTheUser) {
  Scenario s = paper_small_preset();
  s.num_waveguides = 1;
  s.num_users = 1;
  s.waveguides = default_layout(1, 10, 10);
  s.user_positions = {{3.3, 2.0}};
  const ContinuousResult r = continuous_grid_search(s, {1}, 50, 3);
  ASSERT_TRUE(r.feasible);
  // Closest grid point to x = 3.3 among (g + 0.5) * 0.2.
  EXPECT_NEAR(r.offsets[0][0], 3.3, 1e-9);
  const double d = std::sqrt(3.0 * 3.0 + 25.0);
  EXPECT_NEAR(r.power / (s.noise_power * s.sinr_min * d * d / reference_gain(s.carrier_freq)), 1.0, 1e-9);
}

TEST(ContinuousGrid, NotWorseThanItsStart) {
  Scenario s = with_users({{2.0, 3.0}, {8.0, 6.0}});
  const ContinuousResult start = continuous_grid_search(s, {2, 1}, 20, 0);
  const ContinuousResult r = continuous_grid_search(s, {2, 1}, 20, 3);
  EXPECT_LE(r.power, start.power);
}

TEST(Exhaustive, CountsNonemptyPatterns) {
  Scenario s = paper_small_preset();
  s.num_waveguides = 1;
  s.num_users = 1;
  s.antennas_per_waveguide = 2;
  s.waveguides = default_layout(1, 10, 10);
  s.user_positions = {{2.0, 2.0}};
  const ExhaustiveResult r = exhaustive_oracle(build_channels(s), s.sinr_min, s.noise_power);
  EXPECT_EQ(r.evaluated, 3);
  Scenario big = paper_small_preset();
  big.antennas_per_waveguide = 8;
  big.user_positions = {{1, 1}, {2, 2}};
  EXPECT_THROW(exhaustive_oracle(build_channels(big), big.sinr_min, big.noise_power), std::invalid_argument);
}

TEST(Exhaustive, SingleUserClosedFormAndSocpRankAlike) {
  Scenario s = paper_small_preset();
  s.num_users = 1;
  s.antennas_per_waveguide = 3;
  s.user_positions = {{6.0, 4.0}};
  const ChannelSet ch = build_channels(s);
  const ExhaustiveResult r = exhaustive_oracle(ch, s.sinr_min, s.noise_power);
  double best = 1e300;
  ActivationPattern arg;
  for (std::uint64_t mask = 1; mask < 64; ++mask) {
    const auto p = ActivationPattern::from_mask(3, 2, mask);
    if (!p.count(0) || !p.count(1)) continue;
    const FixedSolve f = solve_fixed_activation(ch, p, s.sinr_min, s.noise_power);
    if (f.power < best) best = f.power, arg = p;
  }
  EXPECT_EQ(arg, r.pattern);
  EXPECT_NEAR(best / r.power, 1.0, 1e-7);
}

TEST(Experiment, EmptySweepWritesHeaderOnly) {
  ExperimentSpec spec;
  spec.base = paper_small_preset();
  const auto recs = run_experiment(spec);
  EXPECT_TRUE(recs.empty());
  std::ostringstream os;
  io::write_results(os, recs);
  const std::string text = os.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
}

TEST(Experiment, SameSeedSameBytesAcrossThreadCounts) {
  ExperimentSpec spec;
  spec.base = paper_small_preset();
  spec.base.antennas_per_waveguide = 3;
  spec.sweep_key = "sinr_db";
  spec.sweep_values = {10.0, 20.0};
  spec.solvers = {"matching", "baseline-mimo", "exhaustive"};
  spec.trials = 3;
  spec.seed = 9;
  std::ostringstream a, b;
  io::write_results(a, run_experiment(spec));
  spec.threads = 3;
  io::write_results(b, run_experiment(spec));
  EXPECT_EQ(a.str(), b.str());
  const std::string text = a.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 2 * 3 * 3);
}

TEST(Experiment, FailuresAreRecordedNotThrown) {
  ExperimentSpec spec;
  spec.base = paper_small_preset();
  spec.sweep_values = {0.0};
  spec.solvers = {"bnb-su"};
  const auto recs = run_experiment(spec);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].status.rfind("error:", 0), 0u);
  spec.solvers = {"nope"};
  EXPECT_THROW(run_experiment(spec), std::invalid_argument);
}

TEST(Experiment, UsersArePairedAcrossSweepPoints) {
  ExperimentSpec spec;
  spec.base = paper_small_preset();
  spec.sweep_key = "sinr_db";
  const Scenario a = trial_scenario(spec, 10.0, 4);
  const Scenario b = trial_scenario(spec, 25.0, 4);
  EXPECT_EQ(a.user_positions[1].x, b.user_positions[1].x);
  EXPECT_NE(a.sinr_min, b.sinr_min);
}

TEST(Experiment, SummaryStatistics) {
  ExperimentSpec spec;
  spec.sweep_values = {1.0};
  spec.solvers = {"x"};
  std::vector<ResultRecord> recs(3);
  recs[0].power_dbm = -10;
  recs[1].power_dbm = -20;
  for (auto& r : recs) r.sweep_value = 1.0, r.solver = "x";
  const auto rows = summarize(spec, recs);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].ok, 2);
  EXPECT_EQ(rows[0].failed, 1);
  EXPECT_DOUBLE_EQ(rows[0].mean_dbm, -15.0);
  EXPECT_DOUBLE_EQ(rows[0].min_dbm, -20.0);
}

TEST(Settings, ApplyAndReject) {
  Scenario s = paper_small_preset();
  apply_setting(s, "N", 4);
  EXPECT_EQ(s.waveguides.size(), 4u);
  apply_setting(s, "sinr_db", 15);
  EXPECT_NEAR(s.sinr_min, std::pow(10.0, 1.5), 1e-9);
  EXPECT_THROW(apply_setting(s, "L", 2.5), std::invalid_argument);
  EXPECT_THROW(apply_setting(s, "colour", 1), std::invalid_argument);
}

TEST(Io, NumbersRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 6.02e23}) EXPECT_EQ(std::stod(io::num(v)), v);
  EXPECT_EQ(io::num(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(io::field("a,b"), "\"a,b\"");
}

TEST(Io, ReadsSamplesWithOrWithoutHeader) {
  std::istringstream a("spacing,kappa\n1,0.2\n2,0.1\n");
  EXPECT_EQ(io::read_samples(a).size(), 2u);
  std::istringstream b("1 0.2\n# note\n2\t0.1\n");
  EXPECT_EQ(io::read_samples(b).size(), 2u);
  std::istringstream c("1,0.2\nx,y\n");
  EXPECT_THROW(io::read_samples(c), std::runtime_error);
}
