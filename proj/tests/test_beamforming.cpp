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
#include <complex>

#include "pass/beamforming.hpp"

using namespace pass;
using cd = std::complex<double>;

namespace {

struct Instance {
  Scenario s;
  ChannelSet ch;
  ActivationPattern p;
};

Instance random_instance(std::uint64_t seed, int trial, int N, int K, int L) {
  TrialStream ts(seed, static_cast<std::uint64_t>(trial));
  Instance in;
  in.s = paper_small_preset();
  in.s.num_waveguides = N;
  in.s.num_users = K;
  in.s.antennas_per_waveguide = L;
  in.s.waveguides = default_layout(N, 10, 10);
  in.s.user_positions = random_users(K, 10, 10, ts);
  in.ch = build_channels(in.s);
  std::vector<int> f(static_cast<std::size_t>(N * L));
  for (int m = 0; m < N * L; ++m) f[static_cast<std::size_t>(m)] = ts.uniform() < 0.5;
  for (int n = 0; n < N; ++n) f[static_cast<std::size_t>(n * L)] = 1;
  in.p = ActivationPattern::from_flat(L, N, f);
  return in;
}

}  // namespace

TEST(ClosedForm, SingleUserSocpAgrees) {
  for (int t = 0; t < 10; ++t) {
    Instance in = random_instance(4, t, 2, 1, 6);
    const double cf = closed_form_power(in.ch, in.p, in.s.sinr_min, in.s.noise_power);
    const FixedSolve f = solve_fixed_activation(in.ch, in.p, in.s.sinr_min, in.s.noise_power);
    ASSERT_TRUE(f.feasible);
    EXPECT_NEAR(f.power / cf, 1.0, 1e-7);
    const Eigen::MatrixXcd H = effective_channel(in.ch, in.p);
    const Eigen::VectorXcd w = mrt_beamformer(H.col(0), cf);
    EXPECT_NEAR(sinr_of(w, H, in.s.noise_power)(0) / in.s.sinr_min, 1.0, 1e-12);
  }
}

TEST(ClosedForm, ZeroChannelIsInfinite) {
  EXPECT_TRUE(std::isinf(closed_form_power(Eigen::VectorXcd::Zero(3), 100.0, 1e-11)));
  EXPECT_THROW(mrt_beamformer(Eigen::VectorXcd::Zero(2), 1.0), std::invalid_argument);
}

TEST(FixedChannel, OrthogonalUsersDecouple) {
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(2, 2);
  H(0, 0) = cd(3e-3, 1e-3);
  H(1, 1) = cd(-2e-3, 0.0);
  const double g = 100.0, s2 = 1e-11;
  const FixedSolve f = solve_fixed_channel(H, g, s2);
  ASSERT_TRUE(f.feasible);
  const double expect = s2 * g / std::norm(H(0, 0)) + s2 * g / std::norm(H(1, 1));
  EXPECT_NEAR(f.power / expect, 1.0, 1e-7);
  const KktResult k = kkt_beamformer(H, g, s2);
  ASSERT_TRUE(k.converged);
  EXPECT_NEAR(k.powers(0), s2 * g / std::norm(H(0, 0)), 1e-12 * expect);
}

TEST(FixedChannel, KktMatchesSocpAndMeetsTargetsExactly) {
  double worst = 0.0;
  for (int t = 0; t < 40; ++t) {
    const int N = 1 + t % 4;
    const int K = 1 + (t / 4) % N;
    Instance in = random_instance(17, t, N, K, 2 + t % 4);
    const Eigen::MatrixXcd H = effective_channel(in.ch, in.p);
    const FixedSolve so = solve_fixed_channel(H, in.s.sinr_min, in.s.noise_power);
    const KktResult kk = kkt_beamformer(H, in.s.sinr_min, in.s.noise_power);
    ASSERT_TRUE(so.feasible);
    ASSERT_TRUE(kk.converged);
    worst = std::max(worst, std::abs(kk.power - so.power) / so.power);
    const Eigen::VectorXd s = sinr_of(kk.W, H, in.s.noise_power);
    for (int k = 0; k < K; ++k) EXPECT_NEAR(s(k) / in.s.sinr_min, 1.0, 1e-6);
    const Eigen::VectorXd s2 = sinr_of(so.W, H, in.s.noise_power);
    for (int k = 0; k < K; ++k) EXPECT_NEAR(s2(k) / in.s.sinr_min, 1.0, 1e-6);
    EXPECT_NEAR(kk.W.squaredNorm(), kk.power, 1e-12 * kk.power);
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(FixedChannel, SingleUserKktIsMrt) {
  Instance in = random_instance(2, 0, 2, 1, 4);
  const Eigen::MatrixXcd H = effective_channel(in.ch, in.p);
  const KktResult k = kkt_beamformer(H, in.s.sinr_min, in.s.noise_power);
  ASSERT_TRUE(k.converged);
  EXPECT_NEAR(k.power / closed_form_power(H.col(0), in.s.sinr_min, in.s.noise_power), 1.0, 1e-12);
  const cd align = (H.col(0).adjoint() * k.W.col(0))(0);
  EXPECT_NEAR(std::abs(align), H.col(0).norm() * k.W.col(0).norm(), 1e-9 * std::abs(align));
}

TEST(FixedChannel, MoreUsersThanRowsIsInfeasibleWhenAligned) {
  Eigen::MatrixXcd H(1, 2);
  H << cd(1e-3, 0), cd(2e-3, 0);
  EXPECT_FALSE(solve_fixed_channel(H, 100.0, 1e-11).feasible);
  EXPECT_FALSE(beamform_fixed(H, 100.0, 1e-11).feasible);
}

TEST(FixedChannel, RowBoundCanCutTheOptimum) {
  Instance in = random_instance(8, 1, 2, 2, 3);
  const Eigen::MatrixXcd H = effective_channel(in.ch, in.p);
  const FixedSolve free = solve_fixed_channel(H, in.s.sinr_min, in.s.noise_power);
  ASSERT_TRUE(free.feasible);
  Eigen::VectorXd loose = Eigen::VectorXd::Constant(2, 10.0 * std::sqrt(free.power));
  const FixedSolve a = solve_fixed_channel(H, in.s.sinr_min, in.s.noise_power, &loose);
  ASSERT_TRUE(a.feasible);
  EXPECT_NEAR(a.power / free.power, 1.0, 1e-7);
  Eigen::VectorXd tight = Eigen::VectorXd::Constant(2, 1e-3 * std::sqrt(free.power));
  EXPECT_FALSE(solve_fixed_channel(H, in.s.sinr_min, in.s.noise_power, &tight).feasible);
}
