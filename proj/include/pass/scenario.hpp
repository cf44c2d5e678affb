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

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pass/units.hpp"

namespace pass {

enum class Axis { ParallelX, ParallelY };

struct WaveguideLayout {
  Axis axis = Axis::ParallelX;
  double feed_x = 0.0;  // m
  double feed_y = 0.0;  // m
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Physical layout, carrier, noise and QoS of one experiment. All powers in watts.
struct Scenario {
  int num_waveguides = 2;          // N
  int num_users = 2;               // K
  int antennas_per_waveguide = 6;  // L
  double span_x = 10.0;            // m
  double span_y = 10.0;            // m
  double height = 5.0;             // m
  double carrier_freq = 15e9;      // Hz
  double effective_index = 1.4;
  double noise_power = 1e-11;  // W (-80 dBm)
  double sinr_min = 100.0;     // linear (20 dB)
  std::vector<Point2> user_positions;
  std::vector<WaveguideLayout> waveguides;
  double power_budget = 0.0;  // W; 0 selects the automatic budget

  int num_antennas() const { return num_waveguides * antennas_per_waveguide; }
  double carrier_wavelength() const { return kSpeedOfLight / carrier_freq; }
  double guided_wavelength() const { return carrier_wavelength() / effective_index; }

  double span_of(const WaveguideLayout& wg) const {
    return wg.axis == Axis::ParallelX ? span_x : span_y;
  }

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("scenario: " + what); };
    if (num_waveguides < 1) fail("num_waveguides must be >= 1");
    if (num_users < 1) fail("num_users must be >= 1");
    if (antennas_per_waveguide < 1) fail("antennas_per_waveguide must be >= 1");
    if (!(height > 0.0)) fail("height must be > 0");
    if (!(carrier_freq > 0.0)) fail("carrier_freq must be > 0");
    if (!(effective_index > 0.0)) fail("effective_index must be > 0");
    if (!(sinr_min > 0.0)) fail("sinr_min must be > 0");
    if (!(noise_power > 0.0)) fail("noise_power must be > 0");
    if (!(span_x > 0.0) || !(span_y > 0.0)) fail("spans must be > 0");
    if (static_cast<int>(waveguides.size()) != num_waveguides)
      fail("waveguide layout count differs from num_waveguides");
    if (static_cast<int>(user_positions.size()) != num_users)
      fail("user position count differs from num_users");
    const double lambda = carrier_wavelength();
    for (const auto& wg : waveguides) {
      if (!(span_of(wg) / antennas_per_waveguide > lambda))
        fail("antenna spacing must exceed the carrier wavelength");
    }
  }
};

/// Feed points of the reference deployment: waveguides 1-2 run along x with
/// feeds at (0, n*Sy/2); waveguides 3-4 run along y with feeds at ((n-3)*Sx/2, 0).
/// Beyond four waveguides the extra ones run along x, evenly spread in y.
inline std::vector<WaveguideLayout> default_layout(int num_waveguides, double span_x,
                                                   double span_y) {
  std::vector<WaveguideLayout> out;
  out.reserve(static_cast<std::size_t>(num_waveguides));
  if (num_waveguides <= 4) {
    for (int n = 1; n <= num_waveguides; ++n) {
      if (n <= 2)
        out.push_back({Axis::ParallelX, 0.0, n * span_y / 2.0});
      else
        out.push_back({Axis::ParallelY, (n - 3) * span_x / 2.0, 0.0});
    }
  } else {
    for (int n = 1; n <= num_waveguides; ++n)
      out.push_back({Axis::ParallelX, 0.0, n * span_y / num_waveguides});
  }
  return out;
}

/// N=K=2, L=6, 10 m x 10 m, 20 dB target. Users are left empty.
inline Scenario paper_small_preset() {
  Scenario s;
  s.num_waveguides = 2;
  s.num_users = 2;
  s.antennas_per_waveguide = 6;
  s.span_x = 10.0;
  s.span_y = 10.0;
  s.height = 5.0;
  s.carrier_freq = 15e9;
  s.effective_index = 1.4;
  s.noise_power = dbm_to_watts(-80.0);
  s.sinr_min = db_to_linear(20.0);
  s.waveguides = default_layout(s.num_waveguides, s.span_x, s.span_y);
  return s;
}

/// SplitMix64 finalizer; used to derive independent per-trial streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based uniform stream: value i of stream (seed, trial) depends only on
/// those three integers, so solvers and sweep points see identical draws.
class TrialStream {
 public:
  TrialStream(std::uint64_t seed, std::uint64_t trial)
      : key_(splitmix64(splitmix64(seed) ^ (trial * 0xD1B54A32D192ED03ULL))) {}

  double uniform() {
    const std::uint64_t bits = splitmix64(key_ + counter_++);
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Users uniform over [0,Sx] x [0,Sy].
inline std::vector<Point2> random_users(int count, double span_x, double span_y,
                                        TrialStream& stream) {
  std::vector<Point2> users(static_cast<std::size_t>(count));
  for (auto& u : users) {
    u.x = stream.uniform() * span_x;
    u.y = stream.uniform() * span_y;
  }
  return users;
}

}  // namespace pass
