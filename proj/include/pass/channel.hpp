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
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pass/geometry.hpp"

namespace pass {

using cd = std::complex<double>;

/// e^{-i 2 pi distance / wavelength}, reducing distance/wavelength modulo 1 first.
inline cd propagation_phase(double distance, double wavelength) {
  const double cycles = distance / wavelength;
  const double frac = cycles - std::floor(cycles);
  const double arg = -2.0 * kPi * frac;
  return {std::cos(arg), std::sin(arg)};
}

/// Free-space and in-waveguide responses.
///   free_space(m, k): coefficient of antenna m towards user k (multiplies the radiated signal)
///   in_waveguide(m):  unit-modulus phase from the feed point to antenna m
struct ChannelSet {
  int num_waveguides = 0;
  int antennas_per_waveguide = 0;
  Eigen::MatrixXcd free_space;
  Eigen::VectorXcd in_waveguide;
  Eigen::MatrixXd user_distance;  // M x K, metres
  Eigen::VectorXd feed_distance;  // M, metres
  double reference_gain = 0.0;    // c / (4 pi f_c)

  int num_antennas() const { return static_cast<int>(in_waveguide.size()); }
  int num_users() const { return static_cast<int>(free_space.cols()); }
  int flat(int l, int n) const { return n * antennas_per_waveguide + l; }
};

inline double reference_gain(double carrier_freq) {
  return kSpeedOfLight / (4.0 * kPi * carrier_freq);
}

/// Spherical-wavefront line-of-sight coefficients sqrt(phi) e^{-i 2 pi d / lambda_f} / d.
inline void free_space_channels(const Geometry& geometry, double carrier_freq, ChannelSet& out) {
  const auto M = geometry.antenna_positions.size();
  const auto K = geometry.user_positions.size();
  out.num_waveguides = geometry.num_waveguides;
  out.antennas_per_waveguide = geometry.antennas_per_waveguide;
  out.reference_gain = reference_gain(carrier_freq);
  const double amp = std::sqrt(out.reference_gain);
  out.free_space.resize(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(K));
  out.user_distance.resize(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(K));
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t k = 0; k < K; ++k) {
      const double d = (geometry.user_positions[k] - geometry.antenna_positions[m]).norm();
      if (!(d > 0.0)) throw std::invalid_argument("free_space_channels: zero antenna-user distance");
      const auto i = static_cast<Eigen::Index>(m);
      const auto j = static_cast<Eigen::Index>(k);
      out.user_distance(i, j) = d;
      out.free_space(i, j) = amp / d * propagation_phase(d, geometry.carrier_wavelength);
    }
  }
}

inline void in_waveguide_phases(const Geometry& geometry, ChannelSet& out) {
  const int N = geometry.num_waveguides;
  const int L = geometry.antennas_per_waveguide;
  out.in_waveguide.resize(N * L);
  out.feed_distance.resize(N * L);
  for (int n = 0; n < N; ++n) {
    for (int l = 0; l < L; ++l) {
      const double d = geometry.feed_distance(l, n);
      out.feed_distance(geometry.flat(l, n)) = d;
      out.in_waveguide(geometry.flat(l, n)) = propagation_phase(d, geometry.guided_wavelength);
    }
  }
}

inline ChannelSet build_channels(const Scenario& scenario) {
  const Geometry g = build_geometry(scenario);
  ChannelSet ch;
  free_space_channels(g, scenario.carrier_freq, ch);
  in_waveguide_phases(g, ch);
  return ch;
}

/// Binary activation a_{l,n} on an L x N grid, stored waveguide-major (flat = n*L + l).
class ActivationPattern {
 public:
  ActivationPattern() = default;
  ActivationPattern(int antennas_per_waveguide, int num_waveguides)
      : L_(antennas_per_waveguide),
        N_(num_waveguides),
        bits_(static_cast<std::size_t>(antennas_per_waveguide * num_waveguides), 0) {}

  static ActivationPattern from_flat(int L, int N, const std::vector<int>& flat) {
    if (static_cast<int>(flat.size()) != L * N)
      throw std::invalid_argument("ActivationPattern: flat size mismatch");
    ActivationPattern p(L, N);
    for (std::size_t i = 0; i < flat.size(); ++i) {
      if (flat[i] != 0 && flat[i] != 1)
        throw std::invalid_argument("ActivationPattern: entries must be 0 or 1");
      p.bits_[i] = static_cast<std::uint8_t>(flat[i]);
    }
    return p;
  }

  /// Bit m of mask is antenna m (flat index).
  static ActivationPattern from_mask(int L, int N, std::uint64_t mask) {
    ActivationPattern p(L, N);
    for (int m = 0; m < L * N; ++m) p.bits_[static_cast<std::size_t>(m)] = (mask >> m) & 1U;
    return p;
  }

  static ActivationPattern all_on(int L, int N) {
    ActivationPattern p(L, N);
    std::fill(p.bits_.begin(), p.bits_.end(), 1);
    return p;
  }

  int antennas_per_waveguide() const { return L_; }
  int num_waveguides() const { return N_; }
  int size() const { return L_ * N_; }

  bool at(int l, int n) const { return bits_[static_cast<std::size_t>(n * L_ + l)] != 0; }
  bool flat(int m) const { return bits_[static_cast<std::size_t>(m)] != 0; }
  void set(int l, int n, bool on) { bits_[static_cast<std::size_t>(n * L_ + l)] = on ? 1 : 0; }
  void set_flat(int m, bool on) { bits_[static_cast<std::size_t>(m)] = on ? 1 : 0; }

  int count(int n) const {
    int c = 0;
    for (int l = 0; l < L_; ++l) c += at(l, n) ? 1 : 0;
    return c;
  }
  int total() const {
    int c = 0;
    for (auto b : bits_) c += b;
    return c;
  }

  std::uint64_t mask() const {
    std::uint64_t m = 0;
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i]) m |= (std::uint64_t{1} << i);
    return m;
  }

  std::string to_string() const {
    std::string s;
    for (int n = 0; n < N_; ++n) {
      if (n) s += '|';
      for (int l = 0; l < L_; ++l) s += at(l, n) ? '1' : '0';
    }
    return s;
  }

  bool operator==(const ActivationPattern&) const = default;

 private:
  int L_ = 0;
  int N_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Radiation ratios 1/sqrt(L_n^s) on active antennas, zero elsewhere.
inline Eigen::VectorXd equal_power_ratios(const ActivationPattern& pattern) {
  const int L = pattern.antennas_per_waveguide();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(pattern.size());
  for (int n = 0; n < pattern.num_waveguides(); ++n) {
    const int c = pattern.count(n);
    if (c == 0) continue;
    const double b = 1.0 / std::sqrt(static_cast<double>(c));
    for (int l = 0; l < L; ++l)
      if (pattern.at(l, n)) beta(n * L + l) = b;
  }
  return beta;
}

/// Per-antenna coupling into user k's received amplitude, M x K:
/// E(m, k) = conj(g~_m) h_{m,k}, so user k receives sum_m a_m beta_m E(m, k) w_{n(m)}.
inline Eigen::MatrixXcd antenna_coefficients(const ChannelSet& channels) {
  return channels.in_waveguide.conjugate().asDiagonal() * channels.free_space;
}

/// Effective channels, N x K: h~_{k,n} = sum_l a beta g~ conj(h). User k's received
/// amplitude from digital weights w is h~_k^H w.
inline Eigen::MatrixXcd effective_channel(const ChannelSet& channels,
                                          const ActivationPattern& pattern,
                                          const Eigen::VectorXd& ratios) {
  const int L = channels.antennas_per_waveguide;
  const int N = channels.num_waveguides;
  if (pattern.antennas_per_waveguide() != L || pattern.num_waveguides() != N ||
      ratios.size() != N * L)
    throw std::invalid_argument("effective_channel: dimension mismatch");
  const int K = channels.num_users();
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(N, K);
  for (int n = 0; n < N; ++n) {
    for (int l = 0; l < L; ++l) {
      const int m = n * L + l;
      if (!pattern.at(l, n)) continue;
      const cd g = ratios(m) * channels.in_waveguide(m);
      for (int k = 0; k < K; ++k) H(n, k) += g * std::conj(channels.free_space(m, k));
    }
  }
  return H;
}

inline Eigen::MatrixXcd effective_channel(const ChannelSet& channels,
                                          const ActivationPattern& pattern) {
  return effective_channel(channels, pattern, equal_power_ratios(pattern));
}

/// SINR_k = |h~_k^H w_k|^2 / (sum_{j != k} |h~_k^H w_j|^2 + noise).
inline Eigen::VectorXd sinr_of(const Eigen::MatrixXcd& W, const Eigen::MatrixXcd& H,
                               double noise_power) {
  if (W.rows() != H.rows() || W.cols() != H.cols())
    throw std::invalid_argument("sinr_of: dimension mismatch");
  const Eigen::MatrixXcd G = H.adjoint() * W;  // G(k, j) = h~_k^H w_j
  const auto K = W.cols();
  Eigen::VectorXd out(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    double interference = 0.0;
    for (Eigen::Index j = 0; j < K; ++j)
      if (j != k) interference += std::norm(G(k, j));
    out(k) = std::norm(G(k, k)) / (interference + noise_power);
  }
  return out;
}

struct BeamformingSolution {
  Eigen::MatrixXcd W;  // N x K
  double total_power = 0.0;
  Eigen::VectorXd per_user_sinr;
};

inline BeamformingSolution make_solution(Eigen::MatrixXcd W, const Eigen::MatrixXcd& H,
                                         double noise_power) {
  BeamformingSolution s;
  s.per_user_sinr = sinr_of(W, H, noise_power);
  s.total_power = W.squaredNorm();
  s.W = std::move(W);
  return s;
}

}  // namespace pass

template <>
struct std::hash<pass::ActivationPattern> {
  std::size_t operator()(const pass::ActivationPattern& p) const noexcept {
    return std::hash<std::string>{}(p.to_string());
  }
};
