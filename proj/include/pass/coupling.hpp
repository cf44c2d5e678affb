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
#include <stdexcept>
#include <string>
#include <vector>

#include "pass/units.hpp"

// Adjustable power radiation: exponential coupling law kappa(S) = Omega0 e^{-alpha S},
// sequential radiation ratios along a waveguide, and spacing solvers that hit
// requested ratios. Lengths are in millimetres throughout this header.

namespace pass::coupling {

struct CouplingParams {
  double omega0 = 0.3300;  // mm^-1
  double alpha = 0.24615;  // mm^-1
  double d_pa = 5.0;       // mm

  void validate() const {
    if (!(omega0 > 0.0) || !(alpha > 0.0) || !(d_pa > 0.0))
      throw std::invalid_argument("coupling: omega0, alpha and d_pa must be positive");
    if (omega0 * d_pa < kPi / 2.0)
      throw std::invalid_argument("coupling: omega0*d_pa < pi/2, full radiation unreachable");
  }

  /// Spacing at which kappa * d_pa = pi/2 (one antenna radiates everything).
  double min_spacing() const { return std::log(omega0 * d_pa / (kPi / 2.0)) / alpha; }
};

inline double coupling_coefficient(double spacing, const CouplingParams& p) {
  if (spacing < 0.0) throw std::invalid_argument("coupling_coefficient: negative spacing");
  return p.omega0 * std::exp(-p.alpha * spacing);
}

// ---------------------------------------------------------------------------
// Analytical cross-section oracles

enum class Shape { Rectangular, Circular };

struct CrossSection {
  Shape shape = Shape::Rectangular;
  double half_width = 5.0;          // b, mm (core width 2b)
  double n_eff = 1.4;
  double n_clad = 1.0;
  double wavelength = 20.0;         // lambda_f, mm
  double transverse_wavenumber = 0; // k0, mm^-1
  double index_contrast = 0.0;      // Delta0

  double free_wavenumber() const { return 2.0 * kPi / wavelength; }

  /// Cladding decay constant sqrt(k^2 (n_eff^2 - n_clad^2) - k0^2).
  double decay() const {
    if (!(n_eff > n_clad) || n_clad < 1.0)
      throw std::invalid_argument("cross-section: need n_eff > n_clad >= 1");
    const double kf = free_wavenumber();
    const double sq = kf * kf * (n_eff * n_eff - n_clad * n_clad) -
                      transverse_wavenumber * transverse_wavenumber;
    if (!(sq > 0.0)) throw std::domain_error("cross-section: field is not evanescent (alpha not real)");
    return std::sqrt(sq);
  }

  double propagation_constant() const {
    const double kf = free_wavenumber();
    return std::sqrt(kf * kf * n_eff * n_eff - transverse_wavenumber * transverse_wavenumber);
  }

  /// Normalised frequency; the rectangular and circular guides use different forms.
  double v() const {
    const double kf = free_wavenumber();
    if (shape == Shape::Rectangular)
      return kf * n_eff * half_width * std::sqrt(2.0 * index_contrast);
    return kf * half_width * std::sqrt(n_eff * n_eff - n_clad * n_clad);
  }
  double u() const {
    const double kf = free_wavenumber();
    const double g = propagation_constant();
    return half_width * std::sqrt(kf * kf * n_eff * n_eff - g * g);
  }
  double w() const { return half_width * decay(); }

  /// Back-solves k0 so that decay() equals the requested alpha.
  static CrossSection with_target_alpha(Shape shape, double half_width, double n_eff,
                                        double n_clad, double wavelength, double alpha,
                                        double index_contrast) {
    CrossSection cs{shape, half_width, n_eff, n_clad, wavelength, 0.0, index_contrast};
    const double kf = cs.free_wavenumber();
    const double sq = kf * kf * (n_eff * n_eff - n_clad * n_clad) - alpha * alpha;
    if (!(sq > 0.0))
      throw std::domain_error("cross-section: target alpha exceeds the evanescent limit");
    cs.transverse_wavenumber = std::sqrt(sq);
    return cs;
  }
};

inline void require_gap(const CrossSection& cs, double spacing) {
  if (spacing < 2.0 * cs.half_width)
    throw std::invalid_argument("oracle: centre spacing below core width 2b");
}

/// Rectangular guide overlap-integral closed form; exactly exponential in spacing.
inline double oracle_kappa_rect(const CrossSection& cs, double spacing) {
  if (cs.shape != Shape::Rectangular) throw std::invalid_argument("oracle_kappa_rect: shape");
  require_gap(cs, spacing);
  const double a = cs.decay();
  const double b = cs.half_width;
  const double k0 = cs.transverse_wavenumber;
  const double v = cs.v();
  const double pref = std::sqrt(2.0 * cs.index_contrast) / b * (k0 * k0 * a * a * std::pow(b, 4)) /
                      ((1.0 + a * b) * v * v * v);
  return pref * std::exp(-a * (spacing - 2.0 * b));
}

/// Circular guide closed form with modified Bessel K1; carries an extra 1/S factor.
inline double oracle_kappa_circ(const CrossSection& cs, double spacing) {
  if (cs.shape != Shape::Circular) throw std::invalid_argument("oracle_kappa_circ: shape");
  require_gap(cs, spacing);
  const double a = cs.decay();
  const double b = cs.half_width;
  const double u = cs.u();
  const double v = cs.v();
  const double w = cs.w();
  const double k1 = std::cyl_bessel_k(1.0, w);
  return std::sqrt(cs.index_contrast) / b * (u * u / (k1 * k1 * v * v * v)) *
         std::sqrt(kPi * b) / (w * spacing) * std::exp(-a * (spacing - 2.0 * b));
}

// ---------------------------------------------------------------------------
// Fitting

struct Sample {
  double spacing;
  double kappa;
};

/// Least-squares line through (S, ln kappa): Omega0 = e^{intercept}, alpha = -slope.
inline CouplingParams fit_exponential(const std::vector<Sample>& samples, double d_pa = 5.0) {
  if (samples.size() < 2) throw std::invalid_argument("fit_exponential: need >= 2 samples");
  double mean_s = 0.0;
  double mean_y = 0.0;
  for (const auto& s : samples) {
    if (!(s.kappa > 0.0)) throw std::invalid_argument("fit_exponential: kappa must be positive");
    mean_s += s.spacing;
    mean_y += std::log(s.kappa);
  }
  const double n = static_cast<double>(samples.size());
  mean_s /= n;
  mean_y /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& s : samples) {
    const double dx = s.spacing - mean_s;
    sxx += dx * dx;
    sxy += dx * (std::log(s.kappa) - mean_y);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_exponential: all spacings equal");
  const double slope = sxy / sxx;
  CouplingParams p;
  p.alpha = -slope;
  p.omega0 = std::exp(mean_y - slope * mean_s);
  p.d_pa = d_pa;
  return p;
}

/// Largest |kappa_fit/kappa - 1| over the samples.
inline double max_relative_residual(const std::vector<Sample>& samples, const CouplingParams& p) {
  double worst = 0.0;
  for (const auto& s : samples)
    worst = std::max(worst, std::abs(p.omega0 * std::exp(-p.alpha * s.spacing) / s.kappa - 1.0));
  return worst;
}

// ---------------------------------------------------------------------------
// Radiation ratios and spacing plans along one waveguide

/// Spacing per antenna (NaN where inactive), resulting ratios, prior-active counts.
struct SpacingPlan {
  std::vector<bool> active;
  std::vector<double> spacing;
  std::vector<double> ratio;
  std::vector<int> prior_active;
};

namespace detail {
inline double coupling_angle(double spacing, const CouplingParams& p) {
  const double angle = coupling_coefficient(spacing, p) * p.d_pa;
  if (angle > (kPi / 2.0) * (1.0 + 1e-12))
    throw std::domain_error("radiation_ratios: over-coupled antenna (spacing below S_min)");
  return std::min(angle, kPi / 2.0);
}
}  // namespace detail

/// beta_l = a_l sin(kappa_l D) prod_{i<l} sqrt(1 - a_i sin^2(kappa_i D)).
inline std::vector<double> radiation_ratios(const std::vector<bool>& active,
                                            const std::vector<double>& spacings,
                                            const CouplingParams& p) {
  if (active.size() != spacings.size())
    throw std::invalid_argument("radiation_ratios: size mismatch");
  std::vector<double> beta(active.size(), 0.0);
  double remaining = 1.0;  // amplitude still guided
  for (std::size_t l = 0; l < active.size(); ++l) {
    if (!active[l]) continue;
    if (std::isnan(spacings[l])) throw std::invalid_argument("radiation_ratios: missing spacing");
    const double s = std::sin(detail::coupling_angle(spacings[l], p));
    beta[l] = s * remaining;
    remaining *= std::sqrt(std::max(0.0, 1.0 - s * s));
  }
  return beta;
}

namespace detail {
inline double spacing_for_delta(double delta, const CouplingParams& p) {
  return std::log(p.omega0 * p.d_pa / std::asin(delta)) / p.alpha;
}

inline std::vector<int> prior_counts(const std::vector<bool>& active) {
  std::vector<int> rho(active.size(), 0);
  int seen = 0;
  for (std::size_t l = 0; l < active.size(); ++l) {
    rho[l] = seen;
    if (active[l]) ++seen;
  }
  return rho;
}
}  // namespace detail

/// Solves the per-antenna spacings, in propagation order, that realise the
/// requested ratios. targets[l] is read only where active[l].
inline SpacingPlan spacing_for_targets(const std::vector<double>& targets,
                                       const std::vector<bool>& active, const CouplingParams& p) {
  p.validate();
  if (targets.size() != active.size())
    throw std::invalid_argument("spacing_for_targets: size mismatch");
  SpacingPlan plan;
  plan.active = active;
  plan.spacing.assign(active.size(), std::numeric_limits<double>::quiet_NaN());
  plan.prior_active = detail::prior_counts(active);
  double remaining = 1.0;
  for (std::size_t l = 0; l < active.size(); ++l) {
    if (!active[l]) continue;
    if (!(targets[l] > 0.0)) throw std::invalid_argument("spacing_for_targets: target must be > 0");
    if (!(remaining > 0.0))
      throw std::domain_error("spacing_for_targets: no guided power left for antenna " +
                              std::to_string(l));
    double delta = targets[l] / remaining;
    if (delta > 1.0 + 1e-12)
      throw std::domain_error("spacing_for_targets: infeasible target at antenna " +
                              std::to_string(l));
    delta = std::min(delta, 1.0);
    plan.spacing[l] = detail::spacing_for_delta(delta, p);
    remaining *= std::sqrt(std::max(0.0, 1.0 - delta * delta));
  }
  plan.ratio = radiation_ratios(active, plan.spacing, p);
  return plan;
}

/// Spacings giving every active antenna the ratio 1/sqrt(L^s):
/// delta_l = 1/sqrt(L^s - rho_l), S_l = ln(Omega0 D / asin delta_l) / alpha.
inline SpacingPlan equal_power_spacings(const std::vector<bool>& active, const CouplingParams& p) {
  p.validate();
  int total = 0;
  for (bool a : active) total += a ? 1 : 0;
  if (total == 0) throw std::invalid_argument("equal_power_spacings: no active antenna");
  SpacingPlan plan;
  plan.active = active;
  plan.spacing.assign(active.size(), std::numeric_limits<double>::quiet_NaN());
  plan.prior_active = detail::prior_counts(active);
  for (std::size_t l = 0; l < active.size(); ++l) {
    if (!active[l]) continue;
    const double delta = 1.0 / std::sqrt(static_cast<double>(total - plan.prior_active[l]));
    plan.spacing[l] = detail::spacing_for_delta(delta, p);
  }
  plan.ratio = radiation_ratios(active, plan.spacing, p);
  return plan;
}

}  // namespace pass::coupling
