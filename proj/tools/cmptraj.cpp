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

// cmptraj: master equation, trajectory, ensemble, verify and replay runs.
//
// Exit codes: 0 success, 1 verification failure or unexpected error,
// 2 invalid input, 3 numerical invariant violated.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scenario.hpp"

namespace fs = std::filesystem;
using namespace cmptraj;
using cli::json;

namespace {

struct Common {
  std::string out = "cmptraj-out";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<double> dt;
  std::optional<double> t_max;
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ValidationError("cannot write '" + p.string() + "'");
  return os;
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

cli::LoadedScenario load(const std::string& file, const Common& c, const std::string& mode) {
  cli::Overrides ov;
  ov.seed = c.seed;
  ov.threads = c.threads;
  ov.dt = c.dt;
  ov.t_max = c.t_max;
  ov.mode = mode;
  return cli::load_scenario(cli::read_config_file(file), ov);
}

void write_json(const fs::path& p, const json& j) {
  auto os = open_out(p);
  os << j.dump(2) << '\n';
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double max_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

double min_of(const std::vector<double>& v) {
  double m = std::numeric_limits<double>::infinity();
  for (double x : v) m = std::min(m, x);
  return m;
}

json finals(const std::vector<std::string>& names, const std::vector<std::vector<double>>& values) {
  json j = json::object();
  for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = values[i].empty() ? 0.0 : values[i].back();
  return j;
}

int run_master(const std::string& file, const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const cli::LoadedScenario ls = load(file, c, "master");
  const fs::path dir = prepare_dir(c.out);
  write_json(dir / "config.json", ls.effective);

  MasterOptions mo;
  mo.dt = ls.traj.dt;
  mo.steps = ls.traj.steps();
  mo.samples = ls.traj.samples;
  const MasterResult r = propagate(ls.scenario.sys, ls.scenario.gen, ls.scenario.eta, mo, ls.traj.observables);
  {
    auto os = open_out(dir / "master.csv");
    write_master_csv(os, r);
  }
  json s;
  s["mode"] = "master";
  s["steps"] = mo.steps;
  s["samples"] = r.times.size();
  s["max_trace_drift"] = max_of(r.trace_drift);
  s["min_eigenvalue"] = min_of(r.min_eigenvalue);
  s["expected_counts"] = r.integrated_counting_rate;
  s["final"] = finals(r.names, r.values);
  s["runtime_seconds"] = seconds_since(t0);
  write_json(dir / "summary.json", s);
  std::cout << "master: " << r.times.size() << " samples written to " << (dir / "master.csv").string() << '\n';
  return 0;
}

json trajectory_summary(const TrajectoryResult& r, const std::string& mode) {
  json s;
  s["mode"] = mode;
  s["measurement"] = to_string(r.record.kind);
  s["steps"] = r.record.steps;
  s["jumps"] = r.jumps;
  s["max_trace_drift"] = r.max_trace_drift;
  s["max_normalization_error"] = max_of(r.normalization);
  s["min_eigenvalue"] = min_of(r.min_eigenvalue);
  s["final"] = finals(r.names, r.values);
  return s;
}

int run_trajectory_cmd(const std::string& file, const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const cli::LoadedScenario ls = load(file, c, "trajectory");
  const fs::path dir = prepare_dir(c.out);
  write_json(dir / "config.json", ls.effective);

  const TrajectoryResult r = run_trajectory(ls.scenario.sys, ls.scenario.gen, ls.scenario.eta, ls.traj, ls.run.seed);
  {
    auto os = open_out(dir / "trajectory.csv");
    write_trajectory_csv(os, r);
  }
  {
    auto os = open_out(dir / "record.txt");
    write_record(os, r.record);
  }
  json s = trajectory_summary(r, "trajectory");
  s["seed"] = ls.run.seed;
  s["scheme"] = to_string(ls.traj.scheme);
  s["runtime_seconds"] = seconds_since(t0);
  write_json(dir / "summary.json", s);
  std::cout << "trajectory: " << r.record.steps << " steps";
  if (r.record.kind == MeasurementKind::counting) std::cout << ", " << r.jumps << " jumps";
  std::cout << ", written to " << dir.string() << '\n';
  return 0;
}

int run_replay(const std::string& file, const std::string& record_file, const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const cli::LoadedScenario ls = load(file, c, "replay");
  std::ifstream in(record_file);
  if (!in) throw ValidationError("cannot open record file '" + record_file + "'");
  const MeasurementRecord rec = read_record(in);
  const fs::path dir = prepare_dir(c.out);
  write_json(dir / "config.json", ls.effective);

  const TrajectoryResult r = filter_replay(ls.scenario.sys, ls.scenario.gen, ls.scenario.eta, rec, ls.traj);
  {
    auto os = open_out(dir / "replay.csv");
    write_trajectory_csv(os, r);
  }
  json s = trajectory_summary(r, "replay");
  s["record"] = record_file;
  s["runtime_seconds"] = seconds_since(t0);
  write_json(dir / "summary.json", s);
  std::cout << "replay: " << rec.steps << " steps filtered, written to " << dir.string() << '\n';
  return 0;
}

int run_ensemble_cmd(const std::string& file, const Common& c) {
  const cli::LoadedScenario ls = load(file, c, "ensemble");
  const fs::path dir = prepare_dir(c.out);
  write_json(dir / "config.json", ls.effective);

  EnsembleConfig ec;
  ec.n_traj = ls.run.n_traj;
  ec.master_seed = ls.run.seed;
  ec.threads = ls.run.threads;
  ec.traj = ls.traj;
  const EnsembleStats st = run_ensemble(ls.scenario, ec);
  const ConvergenceReport rep = convergence_report(st);
  {
    auto os = open_out(dir / "ensemble.csv");
    write_ensemble_csv(os, st);
  }
  if (st.kind == MeasurementKind::counting) {
    auto os = open_out(dir / "histogram.csv");
    write_histogram_csv(os, st);
  }

  json s;
  s["mode"] = "ensemble";
  s["measurement"] = to_string(st.kind);
  s["scheme"] = to_string(ls.traj.scheme);
  s["n_traj"] = st.n_traj;
  s["failures"] = json::array();
  for (const auto& f : st.failures) s["failures"].push_back({{"index", f.index}, {"message", f.message}});
  s["max_trace_drift"] = st.max_trace_drift;
  s["max_normalization_error"] = st.max_normalization;
  s["min_eigenvalue"] = st.min_eigenvalue;
  s["max_purity_loss"] = st.max_purity_loss;
  s["reference_max_trace_drift"] = st.reference_max_trace_drift;
  s["reference_min_eigenvalue"] = st.reference_min_eigenvalue;
  json conv = json::array();
  for (const auto& o : rep.observables) {
    conv.push_back({{"name", o.name}, {"max_abs_deviation_sigma", o.max_abs_deviation},
                    {"fraction_within_3sigma", o.fraction_within}, {"pass", o.pass}});
  }
  s["convergence"] = conv;
  s["consistent"] = rep.pass;
  if (st.kind == MeasurementKind::homodyne) {
    s["innovation_mean"] = {{"mean", st.innovation_mean.mean}, {"stderr", st.innovation_mean.std_error()}};
    s["innovation_variance"] = {{"mean", st.innovation_variance.mean}, {"stderr", st.innovation_variance.std_error()}};
  } else {
    s["jump_count"] = {{"mean", st.jump_count.mean}, {"stderr", st.jump_count.std_error()}};
    s["expected_jumps"] = st.expected_jumps;
    s["jump_histogram"] = st.jump_histogram;
  }
  s["runtime_seconds"] = st.runtime_seconds;
  write_json(dir / "summary.json", s);

  std::cout << "ensemble: " << st.n_traj << " trajectories, " << st.failures.size() << " failed\n";
  for (const auto& o : rep.observables) {
    std::cout << "  " << o.name << ": " << std::fixed << std::setprecision(4) << 100.0 * o.fraction_within
              << "% of samples within 3 sigma (max " << std::setprecision(3) << o.max_abs_deviation << ")\n";
  }
  std::cout.unsetf(std::ios::floatfield);
  return 0;
}

// Identities of the n-photon source for identical Gaussian pulses.
int run_verify(std::size_t n, const std::optional<std::string>& out) {
  if (n < 1 || n > kMaxNormIdentityPhotons) throw ValidationError("verify: --n must be between 1 and 4");
  const double t_max = 16.0;
  const std::size_t intervals = 10000;
  const WavePacket packet = WavePacket::gaussian(6.0, 1.0);
  const std::vector<WavePacket> packets(n, packet);
  const UniformGrid grid(t_max, intervals);
  const GeneratorClosedForm cf(packets, grid);
  const WeightTable& w = cf.weights();

  struct Row {
    std::string name;
    double value, expected, tol;
  };
  std::vector<Row> rows;
  double fact = 1.0;
  for (std::size_t k = 1; k <= n; ++k) {
    fact *= static_cast<double>(k);
    rows.push_back({"c_" + std::to_string(k), w.norm_const(k), 1.0 / static_cast<double>(n - k + 1), 1e-8});
  }
  if (n >= 2) {
    const double direct = quad::piecewise_gauss([&](double s) { return packet.intensity(s) * w.w(2, s); }, 0.0, t_max,
                                                [&] {
                                                  std::vector<double> b;
                                                  for (std::size_t i = 1; i < intervals; ++i) b.push_back(grid.time(i));
                                                  return b;
                                                }());
    rows.push_back({"int |xi_1|^2 w_2", direct, 1.0 / static_cast<double>(n), 1e-8});
  }
  rows.push_back({"prod c_k", w.norm_const_product(), 1.0 / fact, 1e-6});
  const NormIdentity ni = norm_identity(packets, grid);
  rows.push_back({"field norm", ni.lhs, ni.rhs, 1e-6});

  // Populations of the source alone against the closed forms.
  GeneratorOptions go;
  go.t_max = t_max;
  go.intervals = intervals;
  const CmpGenerator gen = n_photon_generator(packets, go);
  MasterOptions mo;
  mo.steps = 10000;
  mo.dt = t_max / static_cast<double>(mo.steps);
  mo.samples = 0;
  const MasterResult mr = propagate(SLHTriple::trivial(1), gen, basis_vector(1, 0), mo, {});
  double pop_dev = 0.0, sum_dev = 0.0;
  for (std::size_t i = 0; i < mr.times.size(); ++i) {
    const std::vector<double> p = cf.populations(mr.times[i]);
    double sum = 0.0;
    for (std::size_t j = 0; j <= n; ++j) {
      pop_dev = std::max(pop_dev, std::abs(mr.aux_populations[i][j] - p[j]));
      sum += p[j];
    }
    sum_dev = std::max(sum_dev, std::abs(sum - 1.0));
  }
  rows.push_back({"max |p_master - p_closed|", pop_dev, 0.0, 1e-6});
  rows.push_back({"max |sum p - 1|", sum_dev, 0.0, 1e-6});

  bool ok = true;
  json jr = json::array();
  std::cout << "identities for " << n << " identical Gaussian pulses (t0 = 6, sigma = 1, T = 16)\n";
  std::cout << std::left << std::setw(28) << "quantity" << std::right << std::setw(22) << "value" << std::setw(22)
            << "expected" << std::setw(14) << "residual" << "  status\n";
  for (const Row& r : rows) {
    const double res = std::abs(r.value - r.expected);
    const bool pass = res <= r.tol;
    ok = ok && pass;
    std::cout << std::left << std::setw(28) << r.name << std::right << std::setprecision(15) << std::setw(22) << r.value
              << std::setw(22) << r.expected << std::setprecision(3) << std::setw(14) << res << "  "
              << (pass ? "ok" : "FAIL") << '\n';
    jr.push_back({{"quantity", r.name}, {"value", r.value}, {"expected", r.expected}, {"residual", res},
                  {"tolerance", r.tol}, {"pass", pass}});
  }
  if (out) {
    const fs::path dir = prepare_dir(*out);
    write_json(dir / "summary.json", {{"mode", "verify"}, {"photons", n}, {"rows", jr}, {"pass", ok}});
  }
  std::cout << (ok ? "verify: all identities hold\n" : "verify: FAILED\n");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cmptraj: quantum trajectories driven by continuous matrix product inputs"};
  app.require_subcommand(1);
  Common c;
  std::optional<std::string> verify_out;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", c.out, "output directory")->capture_default_str();
    sub->add_option("--seed", c.seed, "master seed (overrides run.seed)");
    sub->add_option("--threads", c.threads, "worker threads, 0 = auto (overrides run.threads)");
    sub->add_option("--dt", c.dt, "time step (overrides numerics.dt)");
    sub->add_option("--tmax", c.t_max, "horizon (overrides numerics.t_max)");
  };

  std::string config, record;
  auto* master = app.add_subcommand("master", "integrate the joint master equation");
  master->add_option("config", config, "scenario file")->required();
  add_common(master);
  auto* traj = app.add_subcommand("trajectory", "one conditional trajectory with a self-generated record");
  traj->add_option("config", config, "scenario file")->required();
  add_common(traj);
  auto* ens = app.add_subcommand("ensemble", "trajectory ensemble checked against the master equation");
  ens->add_option("config", config, "scenario file")->required();
  add_common(ens);
  auto* rep = app.add_subcommand("replay", "filter a stored measurement record");
  rep->add_option("config", config, "scenario file")->required();
  rep->add_option("record", record, "record file")->required();
  add_common(rep);
  std::size_t n_photons = 2;
  auto* ver = app.add_subcommand("verify", "check the n-photon source identities");
  ver->add_option("--n", n_photons, "number of photons (1-4)")->capture_default_str();
  ver->add_option("--out", verify_out, "directory for summary.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*master) return run_master(config, c);
    if (*traj) return run_trajectory_cmd(config, c);
    if (*ens) return run_ensemble_cmd(config, c);
    if (*rep) return run_replay(config, record, c);
    return run_verify(n_photons, verify_out);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error at t = " << e.time() << ": " << e.what() << '\n';
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
