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
#include <vector>

#include "pass/coupling.hpp"

using namespace pass;
using namespace pass::coupling;

namespace {
const CouplingParams kDefault{};

std::vector<bool> ones(int n) { return std::vector<bool>(static_cast<std::size_t>(n), true); }
}  // namespace

TEST(CouplingLaw, ZeroSpacingGivesOmega0) {
  EXPECT_DOUBLE_EQ(coupling_coefficient(0.0, kDefault), 0.33);
  EXPECT_THROW(coupling_coefficient(-0.1, kDefault), std::invalid_argument);
}

TEST(CouplingLaw, MinimumSpacingRadiatesFully) {
  const double s = kDefault.min_spacing();
  EXPECT_NEAR(s, 0.1999, 5e-4);
  EXPECT_NEAR(std::sin(coupling_coefficient(s, kDefault) * kDefault.d_pa), 1.0, 1e-12);
  EXPECT_NEAR(coupling_coefficient(0.1999, kDefault), 0.31416, 5e-5);
}

TEST(CouplingLaw, FirstOfSixRadiatesOneOverSqrtSix) {
  const double k = coupling_coefficient(5.554, kDefault);
  EXPECT_NEAR(k, 0.08410, 5e-5);
  EXPECT_NEAR(std::sin(k * 5.0), 1.0 / std::sqrt(6.0), 1e-4);
}

TEST(Oracles, RectangularZeroGapEqualsPrefactorAndDecaysExponentially) {
  const auto cs = CrossSection::with_target_alpha(Shape::Rectangular, 5.0, 1.4, 1.0, 20.0, 0.24615, 0.01);
  EXPECT_NEAR(cs.decay(), 0.24615, 1e-12);
  const double a = cs.decay(), b = cs.half_width, k0 = cs.transverse_wavenumber, v = cs.v();
  const double pref = std::sqrt(2 * 0.01) / b * (k0 * k0 * a * a * std::pow(b, 4)) / ((1 + a * b) * v * v * v);
  EXPECT_NEAR(oracle_kappa_rect(cs, 10.0) / pref, 1.0, 1e-14);
  for (double s : {10.0, 12.5, 20.0})
    EXPECT_NEAR(oracle_kappa_rect(cs, s + 1.0 / a) / oracle_kappa_rect(cs, s), std::exp(-1.0), 1e-13);
  EXPECT_THROW(oracle_kappa_rect(cs, 9.0), std::invalid_argument);
}

TEST(Oracles, RectangularFitIsExact) {
  const auto cs = CrossSection::with_target_alpha(Shape::Rectangular, 5.0, 1.4, 1.0, 20.0, 0.24615, 0.01);
  std::vector<Sample> samples;
  for (int i = 0; i <= 40; ++i) {
    const double s = 10.0 + 0.5 * i;
    samples.push_back({s, oracle_kappa_rect(cs, s)});
  }
  const CouplingParams p = fit_exponential(samples);
  EXPECT_NEAR(p.alpha / cs.decay(), 1.0, 1e-10);
  const double expect_omega = oracle_kappa_rect(cs, 10.0) * std::exp(cs.decay() * 10.0);
  EXPECT_NEAR(p.omega0 / expect_omega, 1.0, 1e-10);
  EXPECT_LT(max_relative_residual(samples, p), 1e-10);
}

TEST(Oracles, CircularRatioAndMonotonicity) {
  const auto cs = CrossSection::with_target_alpha(Shape::Circular, 5.0, 1.4, 1.0, 20.0, 0.24615, 0.01);
  const double a = cs.decay();
  const double s1 = 11.0, s2 = 14.0;
  EXPECT_NEAR(oracle_kappa_circ(cs, s1) / oracle_kappa_circ(cs, s2), (s2 / s1) * std::exp(-a * (s1 - s2)), 1e-12);
  double prev = oracle_kappa_circ(cs, 10.0);
  for (double s = 10.1; s < 16.0; s += 0.1) {
    const double k = oracle_kappa_circ(cs, s);
    EXPECT_LT(k, prev);
    prev = k;
  }
  std::vector<Sample> samples;
  for (int i = 0; i <= 30; ++i) samples.push_back({10.0 + 0.2 * i, oracle_kappa_circ(cs, 10.0 + 0.2 * i)});
  const CouplingParams p = fit_exponential(samples);
  // The 1/S factor varies by 16/10 over the window; residuals stay well inside it.
  EXPECT_LT(max_relative_residual(samples, p), 0.6);
  EXPECT_GT(p.alpha, a);
}

TEST(Oracles, RejectsNonEvanescentField) {
  CrossSection cs;
  cs.transverse_wavenumber = 100.0;
  EXPECT_THROW(cs.decay(), std::domain_error);
  cs.n_eff = 0.9;
  EXPECT_THROW(cs.decay(), std::invalid_argument);
}

TEST(Fit, RecoversExactModelAndInterpolatesTwoPoints) {
  std::vector<Sample> s;
  for (double x : {0.0, 1.0, 2.5, 4.0, 7.0}) s.push_back({x, coupling_coefficient(x, kDefault)});
  const CouplingParams p = fit_exponential(s);
  EXPECT_NEAR(p.omega0, 0.33, 1e-10);
  EXPECT_NEAR(p.alpha, 0.24615, 1e-10);
  const CouplingParams two = fit_exponential({{1.0, 0.2}, {3.0, 0.05}});
  EXPECT_NEAR(two.omega0 * std::exp(-two.alpha * 1.0), 0.2, 1e-14);
  EXPECT_NEAR(two.omega0 * std::exp(-two.alpha * 3.0), 0.05, 1e-14);
  EXPECT_THROW(fit_exponential({{1.0, 0.2}}), std::invalid_argument);
  EXPECT_THROW(fit_exponential({{1.0, 0.2}, {1.0, 0.1}}), std::invalid_argument);
  EXPECT_THROW(fit_exponential({{1.0, 0.2}, {2.0, 0.0}}), std::invalid_argument);
}

TEST(Ratios, SingleAntennaAtMinimumSpacing) {
  const auto b = radiation_ratios({true}, {kDefault.min_spacing()}, kDefault);
  EXPECT_NEAR(b[0], 1.0, 1e-12);
}

TEST(Ratios, MatchesSequentialRecomputation) {
  const std::vector<bool> act{true, false, true, true};
  const std::vector<double> sp{2.0, std::nan(""), 1.1, 3.7};
  const auto b = radiation_ratios(act, sp, kDefault);
  double guided = 1.0;  // power fraction
  for (std::size_t l = 0; l < act.size(); ++l) {
    if (!act[l]) {
      EXPECT_EQ(b[l], 0.0);
      continue;
    }
    const double s = std::sin(0.33 * std::exp(-0.24615 * sp[l]) * 5.0);
    EXPECT_NEAR(b[l], s * std::sqrt(guided), 1e-14);
    guided -= s * s * guided;
  }
}

TEST(Ratios, RejectsOverCoupling) {
  EXPECT_THROW(radiation_ratios({true}, {0.1}, kDefault), std::domain_error);
}

TEST(Spacing, SixEqualPowerAntennas) {
  const SpacingPlan p = equal_power_spacings(ones(6), kDefault);
  const double expect[] = {5.5535, 5.1570, 4.6630, 4.0062, 3.0158, 0.1998};
  for (int l = 0; l < 6; ++l) {
    EXPECT_NEAR(p.spacing[l], expect[l], 1e-3);
    EXPECT_NEAR(p.ratio[l], 1.0 / std::sqrt(6.0), 1e-12);
    EXPECT_EQ(p.prior_active[l], l);
    if (l > 0) {
      EXPECT_LT(p.spacing[l], p.spacing[l - 1]);
    }
  }
}

TEST(Spacing, OneAndTwoAntennas) {
  EXPECT_NEAR(equal_power_spacings(ones(1), kDefault).spacing[0], kDefault.min_spacing(), 1e-15);
  const SpacingPlan two = equal_power_spacings(ones(2), kDefault);
  const SpacingPlan six = equal_power_spacings(ones(6), kDefault);
  EXPECT_NEAR(two.spacing[0], six.spacing[4], 1e-15);
  EXPECT_NEAR(two.spacing[1], six.spacing[5], 1e-15);
}

TEST(Spacing, ExactForEveryPatternUpToEight) {
  double worst = 0.0;
  for (int L = 1; L <= 8; ++L) {
    for (unsigned mask = 1; mask < (1u << L); ++mask) {
      std::vector<bool> act(static_cast<std::size_t>(L));
      int count = 0;
      for (int l = 0; l < L; ++l) count += (act[l] = (mask >> l) & 1u) ? 1 : 0;
      const SpacingPlan p = equal_power_spacings(act, kDefault);
      double power = 0.0;
      for (int l = 0; l < L; ++l) {
        if (!act[l]) continue;
        worst = std::max(worst, std::abs(p.ratio[l] - 1.0 / std::sqrt(count)));
        EXPECT_GE(p.spacing[l], kDefault.min_spacing() - 1e-12);
        power += p.ratio[l] * p.ratio[l];
      }
      EXPECT_LE(power, 1.0 + 1e-12);
    }
  }
  EXPECT_LT(worst, 1e-9);
  for (int ls = 1; ls <= 12; ++ls) {
    const SpacingPlan p = equal_power_spacings(ones(ls), kDefault);
    for (double r : p.ratio) EXPECT_NEAR(r, 1.0 / std::sqrt(ls), 1e-9);
  }
}

TEST(Spacing, TargetsRoundTrip) {
  const SpacingPlan p = spacing_for_targets({0.8, 0.6}, {true, true}, kDefault);
  EXPECT_NEAR(p.ratio[0], 0.8, 1e-12);
  EXPECT_NEAR(p.ratio[1], 0.6, 1e-12);
  EXPECT_NEAR(p.spacing[1], kDefault.min_spacing(), 1e-6);
  const SpacingPlan q = spacing_for_targets({0.3, 0.0, 0.5, 0.4}, {true, false, true, true}, kDefault);
  EXPECT_NEAR(q.ratio[0], 0.3, 1e-9);
  EXPECT_NEAR(q.ratio[2], 0.5, 1e-9);
  EXPECT_NEAR(q.ratio[3], 0.4, 1e-9);
  EXPECT_TRUE(std::isnan(q.spacing[1]));
}

TEST(Spacing, TargetsEqualPowerMatchesEqualPlan) {
  const std::vector<double> t(5, 1.0 / std::sqrt(5.0));
  const SpacingPlan a = spacing_for_targets(t, ones(5), kDefault);
  const SpacingPlan b = equal_power_spacings(ones(5), kDefault);
  for (int l = 0; l < 5; ++l) EXPECT_NEAR(a.spacing[l], b.spacing[l], 1e-9);
  EXPECT_NEAR(spacing_for_targets({1.0}, {true}, kDefault).spacing[0], kDefault.min_spacing(), 1e-12);
}

TEST(Spacing, RejectsInfeasibleTargets) {
  EXPECT_THROW(spacing_for_targets({0.8, 0.7}, {true, true}, kDefault), std::domain_error);
  EXPECT_THROW(spacing_for_targets({1.2}, {true}, kDefault), std::domain_error);
  EXPECT_THROW(equal_power_spacings({false, false}, kDefault), std::invalid_argument);
}
