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

// JSON scenario files for the command-line tool.
//
// complete_config() fills every default and validates field types, so the
// returned document is the exact effective configuration; build_scenario()
// turns it into library objects. Errors carry the JSON pointer of the field.

#ifndef CMPTRAJ_TOOLS_SCENARIO_HPP
#define CMPTRAJ_TOOLS_SCENARIO_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <cmptraj/cmptraj.hpp>
#include <json.hpp>

namespace cmptraj::cli {

using json = nlohmann::json;

class ConfigError : public ValidationError {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : ValidationError("config " + (path.empty() ? std::string("/") : path) + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<double> dt;
  std::optional<double> t_max;
  std::optional<std::string> mode;
};

inline json read_config_file(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open config file '" + file + "'");
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ValidationError("config file '" + file + "': " + e.what());
  }
}

namespace detail {

inline std::string join(const std::string& path, const std::string& key) { return path + "/" + key; }
inline std::string join(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

inline const json& require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  return j;
}

inline double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
  return v;
}

inline double positive(const json& j, const std::string& path) {
  const double v = get_number(j, path);
  if (!(v > 0.0)) throw ConfigError(path, "must be positive");
  return v;
}

inline std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

inline std::uint64_t get_count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) throw ConfigError(path, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

inline void check_keys(const json& obj, const std::string& path, const std::vector<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw ConfigError(join(path, it.key()), "unknown field");
    }
  }
}

inline cplx get_complex(const json& j, const std::string& path) {
  if (j.is_number()) return {get_number(j, path), 0.0};
  if (j.is_array() && j.size() == 2) return {get_number(j[0], join(path, 0)), get_number(j[1], join(path, 1))};
  throw ConfigError(path, "expected a number or an [re, im] pair");
}

inline Operator get_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty array of rows");
  const auto n = static_cast<Index>(j.size());
  Operator m(n, n);
  for (Index r = 0; r < n; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    const std::string rp = join(path, static_cast<std::size_t>(r));
    if (!row.is_array() || static_cast<Index>(row.size()) != n) throw ConfigError(rp, "expected a row of length " + std::to_string(n));
    for (Index c = 0; c < n; ++c) m(r, c) = get_complex(row[static_cast<std::size_t>(c)], join(rp, static_cast<std::size_t>(c)));
  }
  return m;
}

inline StateVector get_vector(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty array of amplitudes");
  StateVector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = get_complex(j[i], join(path, i));
  return v;
}

inline json to_json(const Operator& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(row);
  }
  return rows;
}

template <class T>
void set_default(json& obj, const char* key, const T& value) {
  if (!obj.contains(key)) obj[key] = value;
}

inline json complete_packet(json p, const std::string& path) {
  require_object(p, path);
  const std::string shape = get_string(p.value("shape", json()), join(path, "shape"));
  if (shape == "gaussian") {
    check_keys(p, path, {"shape", "t0", "sigma"});
    if (!p.contains("t0")) throw ConfigError(join(path, "t0"), "missing");
    get_number(p["t0"], join(path, "t0"));
    positive(p.value("sigma", json()), join(path, "sigma"));
  } else if (shape == "exponential") {
    check_keys(p, path, {"shape", "gamma"});
    positive(p.value("gamma", json()), join(path, "gamma"));
  } else if (shape == "square") {
    check_keys(p, path, {"shape", "t0", "t1"});
    const double t0 = get_number(p.value("t0", json()), join(path, "t0"));
    const double t1 = get_number(p.value("t1", json()), join(path, "t1"));
    if (!(t0 >= 0.0 && t1 > t0)) throw ConfigError(join(path, "t1"), "need 0 <= t0 < t1");
  } else if (shape == "tabulated") {
    check_keys(p, path, {"shape", "times", "values"});
    const json& ts = p.value("times", json());
    const json& vs = p.value("values", json());
    if (!ts.is_array() || ts.size() < 2) throw ConfigError(join(path, "times"), "expected at least two times");
    if (!vs.is_array() || vs.size() != ts.size()) throw ConfigError(join(path, "values"), "expected one value per time");
    for (std::size_t i = 0; i < ts.size(); ++i) {
      get_number(ts[i], join(join(path, "times"), i));
      get_complex(vs[i], join(join(path, "values"), i));
    }
  } else {
    throw ConfigError(join(path, "shape"), "unknown shape '" + shape + "' (gaussian, exponential, square, tabulated)");
  }
  return p;
}

inline WavePacket build_packet(const json& p, const std::string& path) {
  const std::string shape = p["shape"].get<std::string>();
  try {
    if (shape == "gaussian") return WavePacket::gaussian(p["t0"].get<double>(), p["sigma"].get<double>());
    if (shape == "exponential") return WavePacket::decaying_exponential(p["gamma"].get<double>());
    if (shape == "square") return WavePacket::square(p["t0"].get<double>(), p["t1"].get<double>());
    std::vector<double> ts;
    std::vector<cplx> vs;
    for (std::size_t i = 0; i < p["times"].size(); ++i) {
      ts.push_back(p["times"][i].get<double>());
      vs.push_back(get_complex(p["values"][i], ""));
    }
    return WavePacket::tabulated(std::move(ts), std::move(vs));
  } catch (const ConfigError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ConfigError(path, e.what());
  }
}

inline const std::vector<std::string>& observable_names() {
  static const std::vector<std::string> names{"identity", "excited_population", "ground_population",
                                              "sigma_x", "sigma_y", "sigma_z"};
  return names;
}

inline std::optional<Operator> named_observable(const std::string& name, Index dim) {
  if (name == "identity") return identity(dim);
  if (dim != 2) return std::nullopt;
  const Operator sm = sigma_minus(), sp = sigma_plus();
  if (name == "excited_population") return Operator(sp * sm);
  if (name == "ground_population") return Operator(sm * sp);
  if (name == "sigma_x") return Operator(sp + sm);
  if (name == "sigma_y") return Operator(kI * (sm - sp));
  if (name == "sigma_z") return Operator(sp * sm - sm * sp);
  return std::nullopt;
}

}  // namespace detail

// Fills defaults and checks structure. Overrides are applied first, so the
// result is what actually runs.
inline json complete_config(json cfg, const Overrides& ov = {}) {
  using namespace detail;
  if (!cfg.is_object()) throw ConfigError("", "top level must be an object");
  check_keys(cfg, "", {"system", "eta", "input", "measurement", "numerics", "run"});

  // system
  set_default(cfg, "system", json::object({{"preset", "two_level_atom"}}));
  json& sys = cfg["system"];
  require_object(sys, "/system");
  Index dim_sys = 0;
  if (sys.contains("preset")) {
    const std::string preset = get_string(sys["preset"], "/system/preset");
    if (preset == "two_level_atom") {
      check_keys(sys, "/system", {"preset", "kappa"});
      set_default(sys, "kappa", 1.0);
      if (!(get_number(sys["kappa"], "/system/kappa") >= 0.0)) throw ConfigError("/system/kappa", "must be non-negative");
      dim_sys = 2;
    } else if (preset == "trivial") {
      check_keys(sys, "/system", {"preset", "dim"});
      set_default(sys, "dim", 1);
      dim_sys = static_cast<Index>(get_count(sys["dim"], "/system/dim"));
      if (dim_sys < 1) throw ConfigError("/system/dim", "must be at least 1");
    } else {
      throw ConfigError("/system/preset", "unknown preset '" + preset + "' (two_level_atom, trivial)");
    }
  } else {
    check_keys(sys, "/system", {"S", "L", "H"});
    if (!sys.contains("L")) throw ConfigError("/system/L", "missing (or give a preset)");
    const Operator l = get_matrix(sys["L"], "/system/L");
    dim_sys = l.rows();
    if (!sys.contains("S")) sys["S"] = to_json(identity(dim_sys));
    if (!sys.contains("H")) sys["H"] = to_json(Operator::Zero(dim_sys, dim_sys));
    for (const char* k : {"S", "H"}) {
      if (get_matrix(sys[k], std::string("/system/") + k).rows() != dim_sys) {
        throw ConfigError(std::string("/system/") + k, "dimension differs from L");
      }
    }
  }

  // eta
  if (!cfg.contains("eta")) cfg["eta"] = dim_sys == 2 ? json("ground") : json({{"basis", 0}});
  {
    const json& e = cfg["eta"];
    if (e.is_string()) {
      const std::string s = e.get<std::string>();
      if (dim_sys != 2 || (s != "ground" && s != "excited")) {
        throw ConfigError("/eta", "'ground'/'excited' need a two-dimensional system");
      }
    } else if (e.is_object()) {
      check_keys(e, "/eta", {"basis"});
      if (get_count(e.value("basis", json()), "/eta/basis") >= static_cast<std::uint64_t>(dim_sys)) {
        throw ConfigError("/eta/basis", "index out of range");
      }
    } else if (get_vector(e, "/eta").size() != dim_sys) {
      throw ConfigError("/eta", "dimension differs from the system");
    }
  }

  // input
  set_default(cfg, "input", json::object({{"kind", "vacuum"}}));
  json& in = cfg["input"];
  require_object(in, "/input");
  set_default(in, "kind", "vacuum");
  const std::string kind = get_string(in["kind"], "/input/kind");
  if (kind == "vacuum") {
    check_keys(in, "/input", {"kind"});
  } else if (kind == "single_photon" || kind == "n_photon") {
    check_keys(in, "/input", {"kind", "packets"});
    if (!in.contains("packets") || !in["packets"].is_array() || in["packets"].empty()) {
      throw ConfigError("/input/packets", "expected a non-empty array of packets");
    }
    if (kind == "single_photon" && in["packets"].size() != 1) throw ConfigError("/input/packets", "single_photon takes exactly one packet");
    for (std::size_t i = 0; i < in["packets"].size(); ++i) {
      in["packets"][i] = complete_packet(in["packets"][i], join("/input/packets", i));
    }
  } else if (kind == "custom_generator") {
    check_keys(in, "/input", {"kind", "R", "H_aux", "phi"});
    if (!in.contains("R")) throw ConfigError("/input/R", "missing");
    const Index d = get_matrix(in["R"], "/input/R").rows();
    if (!in.contains("H_aux")) in["H_aux"] = to_json(Operator::Zero(d, d));
    if (get_matrix(in["H_aux"], "/input/H_aux").rows() != d) throw ConfigError("/input/H_aux", "dimension differs from R");
    if (!in.contains("phi")) throw ConfigError("/input/phi", "missing");
    if (get_vector(in["phi"], "/input/phi").size() != d) throw ConfigError("/input/phi", "dimension differs from R");
  } else {
    throw ConfigError("/input/kind", "unknown kind '" + kind + "' (vacuum, single_photon, n_photon, custom_generator)");
  }

  // measurement
  set_default(cfg, "measurement", "homodyne");
  {
    const std::string m = get_string(cfg["measurement"], "/measurement");
    if (m != "homodyne" && m != "counting" && m != "none") {
      throw ConfigError("/measurement", "expected homodyne, counting or none");
    }
  }

  // numerics
  set_default(cfg, "numerics", json::object());
  json& num = cfg["numerics"];
  require_object(num, "/numerics");
  check_keys(num, "/numerics", {"dt", "t_max", "grid_t_max", "grid_intervals", "eps_w", "eps_nu", "scheme", "samples"});
  if (ov.dt) num["dt"] = *ov.dt;
  if (ov.t_max) num["t_max"] = *ov.t_max;
  set_default(num, "dt", 1e-3);
  set_default(num, "t_max", 10.0);
  set_default(num, "grid_t_max", num["t_max"]);
  set_default(num, "grid_intervals", 10000);
  set_default(num, "eps_w", 1e-8);
  set_default(num, "eps_nu", kDefaultEpsNu);
  set_default(num, "scheme", "kraus");
  set_default(num, "samples", 200);
  const double dt = positive(num["dt"], "/numerics/dt");
  const double t_max = positive(num["t_max"], "/numerics/t_max");
  try {
    steps_for(t_max, dt);
  } catch (const ValidationError& e) {
    throw ConfigError("/numerics/dt", e.what());
  }
  if (positive(num["grid_t_max"], "/numerics/grid_t_max") < t_max) {
    throw ConfigError("/numerics/grid_t_max", "must be at least t_max");
  }
  if (get_count(num["grid_intervals"], "/numerics/grid_intervals") < 4) throw ConfigError("/numerics/grid_intervals", "need at least 4");
  positive(num["eps_w"], "/numerics/eps_w");
  positive(num["eps_nu"], "/numerics/eps_nu");
  {
    const std::string s = get_string(num["scheme"], "/numerics/scheme");
    if (s != "kraus" && s != "euler_maruyama") throw ConfigError("/numerics/scheme", "expected kraus or euler_maruyama");
  }
  get_count(num["samples"], "/numerics/samples");

  // run
  set_default(cfg, "run", json::object());
  json& run = cfg["run"];
  require_object(run, "/run");
  check_keys(run, "/run", {"mode", "n_traj", "seed", "threads", "observables"});
  if (ov.mode) run["mode"] = *ov.mode;
  if (ov.seed) run["seed"] = *ov.seed;
  if (ov.threads) run["threads"] = *ov.threads;
  set_default(run, "mode", "master");
  set_default(run, "n_traj", 100);
  set_default(run, "seed", 0);
  set_default(run, "threads", 0);
  if (!run.contains("observables")) {
    run["observables"] = dim_sys == 2 ? json::array({"excited_population"}) : json::array({"identity"});
  }
  {
    const std::string mode = get_string(run["mode"], "/run/mode");
    if (mode != "master" && mode != "trajectory" && mode != "ensemble" && mode != "replay" &&
        mode != "verify") {
      throw ConfigError("/run/mode", "expected master, trajectory, ensemble, replay or verify");
    }
    if ((mode == "trajectory" || mode == "ensemble" || mode == "replay") && cfg["measurement"] == "none") {
      throw ConfigError("/measurement", "mode '" + mode + "' needs homodyne or counting");
    }
  }
  if (get_count(run["n_traj"], "/run/n_traj") < 1) throw ConfigError("/run/n_traj", "must be at least 1");
  get_count(run["seed"], "/run/seed");
  get_count(run["threads"], "/run/threads");
  const json& obs = run["observables"];
  if (!obs.is_array()) throw ConfigError("/run/observables", "expected an array");
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const std::string p = join("/run/observables", i);
    if (obs[i].is_string()) {
      if (!named_observable(obs[i].get<std::string>(), dim_sys)) {
        throw ConfigError(p, "unknown observable '" + obs[i].get<std::string>() + "' for a " + std::to_string(dim_sys) +
                                 "-dimensional system");
      }
    } else {
      require_object(obs[i], p);
      check_keys(obs[i], p, {"name", "matrix"});
      get_string(obs[i].value("name", json()), join(p, "name"));
      if (!obs[i].contains("matrix")) throw ConfigError(join(p, "matrix"), "missing");
      if (get_matrix(obs[i]["matrix"], join(p, "matrix")).rows() != dim_sys) {
        throw ConfigError(join(p, "matrix"), "dimension differs from the system");
      }
    }
  }
  return cfg;
}

struct RunSettings {
  std::string mode;
  std::string measurement;
  std::size_t n_traj = 1;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct LoadedScenario {
  json effective;
  Scenario scenario;
  TrajectoryConfig traj;
  RunSettings run;
};

// Builds library objects from a completed configuration.
inline LoadedScenario build_scenario(const json& cfg) {
  using namespace detail;
  const json& sys = cfg["system"];
  std::optional<SLHTriple> triple;
  if (sys.contains("preset")) {
    if (sys["preset"] == "two_level_atom") {
      const double kappa = sys["kappa"].get<double>();
      triple = SLHTriple::constant(identity(2), std::sqrt(kappa) * sigma_minus(), Operator::Zero(2, 2));
    } else {
      triple = SLHTriple::trivial(static_cast<Index>(sys["dim"].get<std::uint64_t>()));
    }
  } else {
    try {
      triple = SLHTriple::constant(get_matrix(sys["S"], "/system/S"), get_matrix(sys["L"], "/system/L"),
                                   get_matrix(sys["H"], "/system/H"));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError("/system", e.what());
    }
  }
  const Index ds = triple->dim();

  StateVector eta;
  const json& e = cfg["eta"];
  if (e.is_string()) {
    eta = basis_vector(2, e.get<std::string>() == "excited" ? 0 : 1);
  } else if (e.is_object()) {
    eta = basis_vector(ds, static_cast<Index>(e["basis"].get<std::uint64_t>()));
  } else {
    eta = get_vector(e, "/eta");
    if (std::abs(eta.norm() - 1.0) > kDefaultTol) throw ConfigError("/eta", "must be a unit vector");
  }

  const json& num = cfg["numerics"];
  GeneratorOptions gopts;
  gopts.t_max = num["grid_t_max"].get<double>();
  gopts.intervals = num["grid_intervals"].get<std::size_t>();
  gopts.weights.eps_w = num["eps_w"].get<double>();

  const json& in = cfg["input"];
  const std::string kind = in["kind"].get<std::string>();
  std::optional<CmpGenerator> gen;
  try {
    if (kind == "vacuum") {
      gen = vacuum_generator();
    } else if (kind == "custom_generator") {
      gen = custom_generator(get_matrix(in["R"], "/input/R"), get_matrix(in["H_aux"], "/input/H_aux"),
                             get_vector(in["phi"], "/input/phi"));
    } else {
      std::vector<WavePacket> packets;
      for (std::size_t i = 0; i < in["packets"].size(); ++i) {
        packets.push_back(build_packet(in["packets"][i], join("/input/packets", i)));
      }
      gen = n_photon_generator(std::move(packets), gopts);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& ex) {
    throw ConfigError("/input", ex.what());
  }

  TrajectoryConfig tc;
  const std::string meas = cfg["measurement"].get<std::string>();
  tc.kind = meas == "counting" ? MeasurementKind::counting : MeasurementKind::homodyne;
  tc.scheme = num["scheme"] == "euler_maruyama" ? Scheme::euler_maruyama : Scheme::kraus;
  tc.dt = num["dt"].get<double>();
  tc.t_max = num["t_max"].get<double>();
  tc.samples = num["samples"].get<std::size_t>();
  tc.eps_nu = num["eps_nu"].get<double>();
  const json& obs = cfg["run"]["observables"];
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (obs[i].is_string()) {
      tc.observables.push_back({obs[i].get<std::string>(), *named_observable(obs[i].get<std::string>(), ds)});
    } else {
      tc.observables.push_back(
          {obs[i]["name"].get<std::string>(), get_matrix(obs[i]["matrix"], join("/run/observables", i))});
    }
  }

  RunSettings rs;
  const json& run = cfg["run"];
  rs.mode = run["mode"].get<std::string>();
  rs.measurement = meas;
  rs.n_traj = run["n_traj"].get<std::size_t>();
  rs.seed = run["seed"].get<std::uint64_t>();
  rs.threads = run["threads"].get<unsigned>();

  return LoadedScenario{cfg, Scenario{std::move(*triple), std::move(*gen), std::move(eta)}, std::move(tc), rs};
}

inline LoadedScenario load_scenario(const json& raw, const Overrides& ov = {}) {
  return build_scenario(complete_config(raw, ov));
}

}  // namespace cmptraj::cli

#endif  // CMPTRAJ_TOOLS_SCENARIO_HPP
