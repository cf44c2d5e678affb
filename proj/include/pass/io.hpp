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
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pass/bnb_multi.hpp"
#include "pass/bnb_single.hpp"
#include "pass/coupling.hpp"
#include "pass/harness.hpp"
#include "pass/matching.hpp"

namespace pass::io {

/// Shortest round-trip decimal form; "inf"/"-inf"/"nan" for non-finite values.
inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Quotes a field when it contains a comma, quote or newline.
inline std::string field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline void write_results(std::ostream& os, const std::vector<ResultRecord>& recs) {
  os << "sweep_key,sweep_value,trial,solver,status,power_w,power_dbm,iterations,gap,pattern\n";
  for (const auto& r : recs)
    os << field(r.sweep_key) << ',' << num(r.sweep_value) << ',' << r.trial << ',' << field(r.solver) << ','
       << field(r.status) << ',' << num(r.power_w) << ',' << num(r.power_dbm) << ',' << r.iterations << ','
       << num(r.gap) << ',' << field(r.pattern) << '\n';
}

inline void write_summary_rows(std::ostream& os, const std::string& sweep_key, const std::vector<SummaryRow>& rows) {
  os << "sweep_key sweep_value solver ok failed mean_dbm min_dbm max_dbm\n";
  for (const auto& r : rows)
    os << sweep_key << ' ' << num(r.sweep_value) << ' ' << r.solver << ' ' << r.ok << ' ' << r.failed << ' '
       << num(r.mean_dbm) << ' ' << num(r.min_dbm) << ' ' << num(r.max_dbm) << '\n';
}

inline void write_su_trace(std::ostream& os, const std::vector<SingleUserTraceRow>& t) {
  os << "iteration,run,counts,gub_w,glb_w,open\n";
  for (const auto& r : t)
    os << r.iteration << ',' << r.run << ',' << field(r.counts) << ',' << num(r.gub) << ',' << num(r.glb) << ','
       << r.open << '\n';
}

inline void write_mu_trace(std::ostream& os, const std::vector<MultiUserTraceRow>& t) {
  os << "iteration,gub_w,glb_w,gub_dbm,glb_dbm,max_edge,open\n";
  for (const auto& r : t)
    os << r.iteration << ',' << num(r.gub) << ',' << num(r.glb) << ',' << num(watts_to_dbm(r.gub)) << ','
       << num(r.glb > 0.0 ? watts_to_dbm(r.glb) : -std::numeric_limits<double>::infinity()) << ','
       << num(r.max_edge) << ',' << r.open << '\n';
}

inline void write_matching_trace(std::ostream& os, const MatchingResult& m) {
  os << "round,swaps_evaluated,swaps_accepted,power_dbm\n";
  os << 0 << ',' << 0 << ',' << 0 << ',' << num(watts_to_dbm(m.accepted_powers.front())) << '\n';
  for (const auto& r : m.trace)
    os << r.round << ',' << r.evaluated << ',' << r.accepted << ',' << num(watts_to_dbm(r.power)) << '\n';
}

inline void write_spacing_plan(std::ostream& os, const std::vector<coupling::SpacingPlan>& plans) {
  os << "waveguide,antenna,active,spacing_mm,beta\n";
  for (std::size_t n = 0; n < plans.size(); ++n) {
    const auto& p = plans[n];
    for (std::size_t l = 0; l < p.active.size(); ++l)
      os << n << ',' << l << ',' << (p.active[l] ? 1 : 0) << ',' << num(p.spacing[l]) << ',' << num(p.ratio[l])
         << '\n';
  }
}

/// Matrix rows "n,k,re,im".
inline void write_weights(std::ostream& os, const Eigen::MatrixXcd& W) {
  os << "waveguide,user,re,im\n";
  for (Eigen::Index n = 0; n < W.rows(); ++n)
    for (Eigen::Index k = 0; k < W.cols(); ++k)
      os << n << ',' << k << ',' << num(W(n, k).real()) << ',' << num(W(n, k).imag()) << '\n';
}

/// Two numeric columns (spacing mm, kappa per mm); a non-numeric first line is a header.
inline std::vector<coupling::Sample> read_samples(std::istream& is) {
  std::vector<coupling::Sample> out;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    for (char& c : line)
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    std::istringstream ss(line);
    coupling::Sample s{};
    if (!(ss >> s.spacing >> s.kappa)) {
      if (first) {
        first = false;
        continue;
      }
      throw std::runtime_error("read_samples: malformed line: " + line);
    }
    first = false;
    out.push_back(s);
  }
  return out;
}

inline void write_samples(std::ostream& os, const std::vector<coupling::Sample>& samples, const coupling::CouplingParams& fit) {
  os << "spacing_mm,kappa_per_mm,kappa_fit_per_mm\n";
  for (const auto& s : samples)
    os << num(s.spacing) << ',' << num(s.kappa) << ',' << num(coupling::coupling_coefficient(s.spacing, fit)) << '\n';
}

}  // namespace pass::io
