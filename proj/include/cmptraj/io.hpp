// Copyright 2026 The cmptraj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Text output: CSV time series and measurement records. Doubles are written in
// shortest round-trip form so a record read back replays bit for bit.

#ifndef CMPTRAJ_IO_HPP
#define CMPTRAJ_IO_HPP

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ensemble.hpp"
#include "errors.hpp"
#include "master.hpp"
#include "trajectory.hpp"

namespace cmptraj {

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ValidationError("not a number: '" + std::string(s) + "'");
  }
  return x;
}

// Header lines "# key value", then homodyne rows "t,dY" (t = start of the step)
// or counting rows with one jump time each.
inline void write_record(std::ostream& os, const MeasurementRecord& rec) {
  os << "# kind " << to_string(rec.kind) << '\n';
  os << "# dt " << format_double(rec.dt) << '\n';
  os << "# steps " << rec.steps << '\n';
  if (rec.kind == MeasurementKind::homodyne) {
    os << "t,dY\n";
    for (std::size_t k = 0; k < rec.increments.size(); ++k) {
      os << format_double(static_cast<double>(k) * rec.dt) << ',' << format_double(rec.increments[k]) << '\n';
    }
  } else {
    os << "t_jump\n";
    for (double t : rec.jump_times) os << format_double(t) << '\n';
  }
}

inline MeasurementRecord read_record(std::istream& is) {
  MeasurementRecord rec;
  bool have_kind = false, have_dt = false, have_steps = false, have_header = false;
  std::string line;
  std::size_t lineno = 0;
  const auto fail = [&](const std::string& what) {
    throw ValidationError("record line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const std::string body = line.substr(2);
      const auto sp = body.find(' ');
      if (sp == std::string::npos) fail("malformed header");
      const std::string key = body.substr(0, sp), val = body.substr(sp + 1);
      if (key == "kind") {
        if (val == "homodyne") rec.kind = MeasurementKind::homodyne;
        else if (val == "counting") rec.kind = MeasurementKind::counting;
        else fail("unknown kind '" + val + "'");
        have_kind = true;
      } else if (key == "dt") {
        rec.dt = parse_double(val);
        have_dt = true;
      } else if (key == "steps") {
        rec.steps = static_cast<std::size_t>(std::stoull(val));
        have_steps = true;
      }
      continue;
    }
    if (!have_header) {
      have_header = true;
      if (line == "t,dY" || line == "t_jump") continue;
    }
    try {
      if (rec.kind == MeasurementKind::homodyne) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) fail("expected 't,dY'");
        rec.increments.push_back(parse_double(std::string_view(line).substr(comma + 1)));
      } else {
        rec.jump_times.push_back(parse_double(line));
      }
    } catch (const ValidationError& e) {
      if (std::string(e.what()).rfind("record line", 0) == 0) throw;
      fail(e.what());
    }
  }
  if (!have_kind || !have_dt || !have_steps) throw ValidationError("record: missing kind/dt/steps header");
  rec.validate();
  return rec;
}

// t, observables..., trace_drift
inline void write_trajectory_csv(std::ostream& os, const TrajectoryResult& r) {
  os << 't';
  for (const auto& n : r.names) os << ',' << n;
  os << ",trace_drift\n";
  for (std::size_t s = 0; s < r.times.size(); ++s) {
    os << format_double(r.times[s]);
    for (const auto& v : r.values) os << ',' << format_double(v[s]);
    os << ',' << format_double(r.trace_drift[s]) << '\n';
  }
}

// t, observables..., trace_drift, min_eigenvalue
inline void write_master_csv(std::ostream& os, const MasterResult& r) {
  os << 't';
  for (const auto& n : r.names) os << ',' << n;
  os << ",trace_drift,min_eigenvalue\n";
  for (std::size_t s = 0; s < r.times.size(); ++s) {
    os << format_double(r.times[s]);
    for (const auto& v : r.values) os << ',' << format_double(v[s]);
    os << ',' << format_double(r.trace_drift[s]) << ',' << format_double(r.min_eigenvalue[s]) << '\n';
  }
}

inline void write_ensemble_csv(std::ostream& os, const EnsembleStats& st) {
  os << "t,obs,mean,stderr,reference,deviation_sigma\n";
  for (std::size_t j = 0; j < st.names.size(); ++j)
    for (std::size_t s = 0; s < st.times.size(); ++s) {
      os << format_double(st.times[s]) << ',' << st.names[j] << ',' << format_double(st.mean[j][s]) << ','
         << format_double(st.std_error[j][s]) << ',' << format_double(st.reference[j][s]) << ','
         << format_double(st.deviation[j][s]) << '\n';
    }
}

inline void write_histogram_csv(std::ostream& os, const EnsembleStats& st) {
  os << "jumps,trajectories\n";
  for (std::size_t i = 0; i < st.jump_histogram.size(); ++i) os << i << ',' << st.jump_histogram[i] << '\n';
}

}  // namespace cmptraj

#endif  // CMPTRAJ_IO_HPP
