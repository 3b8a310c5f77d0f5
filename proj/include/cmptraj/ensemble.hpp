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

// Seeded Monte Carlo ensembles of trajectories.
//
// Trajectory i always draws from RandomStream(master_seed, i). Trajectories are
// grouped into fixed chunks of kChunkSize indices; chunk c runs on worker
// c mod W, each chunk accumulates its own running moments, and the chunk
// accumulators are merged by a fixed pairwise tree in chunk order. The result
// is therefore the same bytes for any worker count.

#ifndef CMPTRAJ_ENSEMBLE_HPP
#define CMPTRAJ_ENSEMBLE_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "master.hpp"
#include "trajectory.hpp"

namespace cmptraj {

// Running count / mean / sum of squared deviations.
struct Moments {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    n += 1.0;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }

  static Moments merge(const Moments& a, const Moments& b) {
    if (a.n == 0.0) return b;
    if (b.n == 0.0) return a;
    Moments r;
    r.n = a.n + b.n;
    const double d = b.mean - a.mean;
    r.mean = a.mean + d * (b.n / r.n);
    r.m2 = a.m2 + b.m2 + d * d * (a.n * b.n / r.n);
    return r;
  }

  double variance() const { return n > 1.0 ? m2 / (n - 1.0) : 0.0; }
  double std_error() const { return n > 0.0 ? std::sqrt(variance() / n) : 0.0; }
};

struct Scenario {
  SLHTriple sys;
  CmpGenerator gen;
  StateVector eta;
};

struct EnsembleConfig {
  std::size_t n_traj = 1;
  std::uint64_t master_seed = 0;
  unsigned threads = 0;  // 0 = hardware concurrency
  double max_failure_fraction = 0.01;
  TrajectoryConfig traj;
};

struct TrajectoryFailure {
  std::uint64_t index;
  std::string message;
};

struct EnsembleStats {
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<std::vector<double>> mean;       // [observable][sample]
  std::vector<std::vector<double>> std_error;  // [observable][sample]
  std::vector<std::vector<double>> reference;  // master-equation curve
  std::vector<std::vector<double>> deviation;  // (mean - reference) / std_error
  std::vector<std::size_t> jump_histogram;     // counting: trajectories per jump count
  std::size_t n_traj = 0;                      // successful trajectories
  std::vector<TrajectoryFailure> failures;
  MeasurementKind kind = MeasurementKind::homodyne;

  // Diagnostics over every trajectory and step.
  double max_trace_drift = 0.0;
  double max_normalization = 0.0;
  double min_eigenvalue = std::numeric_limits<double>::infinity();
  double max_purity_loss = 0.0;
  double reference_max_trace_drift = 0.0;
  double reference_min_eigenvalue = 0.0;

  // Homodyne: time-averaged innovation (Y_T - int lambda) / T and mean of (dY - lambda dt)^2 / dt per trajectory.
  Moments innovation_mean;
  Moments innovation_variance;
  // Counting: jump counts against the integral of the unconditional intensity.
  Moments jump_count;
  double expected_jumps = 0.0;

  double runtime_seconds = 0.0;
};

inline double normalized_deviation(double mean, double se, double ref) {
  const double diff = mean - ref;
  if (se > 0.0) return diff / se;
  return std::abs(diff) <= 1e-12 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
}

namespace detail {

inline constexpr std::size_t kChunkSize = 64;

struct ChunkAccumulator {
  std::vector<std::vector<Moments>> obs;  // [observable][sample]
  std::vector<std::size_t> histogram;
  std::vector<TrajectoryFailure> failures;
  Moments innovation_mean, innovation_variance, jump_count;
  double max_trace_drift = 0.0, max_normalization = 0.0, max_purity_loss = 0.0;
  double min_eigenvalue = std::numeric_limits<double>::infinity();
  bool used = false;

  static ChunkAccumulator merge(ChunkAccumulator a, const ChunkAccumulator& b) {
    if (!a.used) return b;
    if (!b.used) return a;
    for (std::size_t j = 0; j < a.obs.size(); ++j)
      for (std::size_t s = 0; s < a.obs[j].size(); ++s) a.obs[j][s] = Moments::merge(a.obs[j][s], b.obs[j][s]);
    if (b.histogram.size() > a.histogram.size()) a.histogram.resize(b.histogram.size(), 0);
    for (std::size_t i = 0; i < b.histogram.size(); ++i) a.histogram[i] += b.histogram[i];
    a.failures.insert(a.failures.end(), b.failures.begin(), b.failures.end());
    a.innovation_mean = Moments::merge(a.innovation_mean, b.innovation_mean);
    a.innovation_variance = Moments::merge(a.innovation_variance, b.innovation_variance);
    a.jump_count = Moments::merge(a.jump_count, b.jump_count);
    a.max_trace_drift = std::max(a.max_trace_drift, b.max_trace_drift);
    a.max_normalization = std::max(a.max_normalization, b.max_normalization);
    a.max_purity_loss = std::max(a.max_purity_loss, b.max_purity_loss);
    a.min_eigenvalue = std::min(a.min_eigenvalue, b.min_eigenvalue);
    return a;
  }
};

inline void accumulate(ChunkAccumulator& acc, const TrajectoryResult& r, double initial_purity) {
  acc.used = true;
  for (std::size_t j = 0; j < r.values.size(); ++j)
    for (std::size_t s = 0; s < r.values[j].size(); ++s) acc.obs[j][s].add(r.values[j][s]);
  for (double d : r.trace_drift) acc.max_trace_drift = std::max(acc.max_trace_drift, d);
  acc.max_trace_drift = std::max(acc.max_trace_drift, r.max_trace_drift);
  for (double d : r.normalization) acc.max_normalization = std::max(acc.max_normalization, d);
  for (double e : r.min_eigenvalue) acc.min_eigenvalue = std::min(acc.min_eigenvalue, e);
  for (double p : r.purity) acc.max_purity_loss = std::max(acc.max_purity_loss, initial_purity - p);
  if (r.record.kind == MeasurementKind::homodyne) {
    const double dt = r.record.dt;
    double sum = 0.0, sq = 0.0;
    for (std::size_t k = 0; k < r.rates.size(); ++k) {
      const double innov = r.record.increments[k] - r.rates[k] * dt;
      sum += innov;
      sq += innov * innov;
    }
    const double steps = static_cast<double>(r.rates.size());
    acc.innovation_mean.add(sum / (steps * dt));
    acc.innovation_variance.add(sq / (steps * dt));
  } else {
    if (acc.histogram.size() <= r.jumps) acc.histogram.resize(r.jumps + 1, 0);
    ++acc.histogram[r.jumps];
    acc.jump_count.add(static_cast<double>(r.jumps));
  }
}

// Pairwise tree reduction in index order.
inline ChunkAccumulator reduce_chunks(std::vector<ChunkAccumulator>& chunks, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return std::move(chunks[lo]);
  const std::size_t mid = lo + (hi - lo) / 2;
  ChunkAccumulator left = reduce_chunks(chunks, lo, mid);
  return ChunkAccumulator::merge(std::move(left), reduce_chunks(chunks, mid, hi));
}

}  // namespace detail

// Runs n_traj trajectories plus the master-equation reference on the same grid.
inline EnsembleStats run_ensemble(const Scenario& sc, const EnsembleConfig& cfg) {
  if (cfg.n_traj < 1) throw ValidationError("ensemble: n_traj must be at least 1");
  const auto start = std::chrono::steady_clock::now();
  const TrajectoryConfig& tc = cfg.traj;
  const std::size_t steps = tc.steps();

  MasterOptions mo;
  mo.dt = tc.dt;
  mo.steps = steps;
  mo.samples = tc.samples;
  const MasterResult ref = propagate(sc.sys, sc.gen, sc.eta, mo, tc.observables);
  if (tc.kind == MeasurementKind::counting) validate_counting_dt(tc.dt, ref.max_counting_rate);

  const CascadeTable table = make_cascade_table(sc.sys, sc.gen, tc);
  const std::size_t n_samples = ref.times.size();
  const double initial_purity = purity(init_joint(sc.eta, sc.gen).rho);

  const std::size_t n_chunks = (cfg.n_traj + detail::kChunkSize - 1) / detail::kChunkSize;
  std::vector<detail::ChunkAccumulator> chunks(n_chunks);
  for (auto& c : chunks) c.obs.assign(tc.observables.size(), std::vector<Moments>(n_samples));

  const auto run_chunk = [&](std::size_t c) {
    detail::ChunkAccumulator& acc = chunks[c];
    const std::size_t lo = c * detail::kChunkSize, hi = std::min(cfg.n_traj, lo + detail::kChunkSize);
    for (std::size_t i = lo; i < hi; ++i) {
      try {
        const TrajectoryResult r = run_trajectory(table, sc.eta, sc.gen, tc, RandomStream(cfg.master_seed, i));
        detail::accumulate(acc, r, initial_purity);
      } catch (const Error& e) {
        acc.used = true;
        acc.failures.push_back({i, e.what()});
      }
    }
  };

  unsigned workers = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_chunks));
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t c = w; c < n_chunks; c += workers) run_chunk(c);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  detail::ChunkAccumulator total = detail::reduce_chunks(chunks, 0, n_chunks);
  EnsembleStats st;
  st.kind = tc.kind;
  st.times = ref.times;
  st.names = ref.names;
  st.failures = std::move(total.failures);
  st.n_traj = cfg.n_traj - st.failures.size();
  if (static_cast<double>(st.failures.size()) > cfg.max_failure_fraction * static_cast<double>(cfg.n_traj)) {
    const auto& f = st.failures.front();
    throw Error("ensemble: " + std::to_string(st.failures.size()) + " of " + std::to_string(cfg.n_traj) +
                " trajectories failed (first: trajectory " + std::to_string(f.index) + ": " + f.message + ")");
  }
  const std::size_t n_obs = tc.observables.size();
  st.mean.assign(n_obs, std::vector<double>(n_samples));
  st.std_error = st.reference = st.deviation = st.mean;
  for (std::size_t j = 0; j < n_obs; ++j)
    for (std::size_t s = 0; s < n_samples; ++s) {
      const Moments& m = total.obs[j][s];
      st.mean[j][s] = m.mean;
      st.std_error[j][s] = m.std_error();
      st.reference[j][s] = ref.values[j][s];
      st.deviation[j][s] = normalized_deviation(m.mean, st.std_error[j][s], ref.values[j][s]);
    }
  st.jump_histogram = std::move(total.histogram);
  st.max_trace_drift = total.max_trace_drift;
  st.max_normalization = total.max_normalization;
  st.min_eigenvalue = total.min_eigenvalue;
  st.max_purity_loss = total.max_purity_loss;
  for (double d : ref.trace_drift) st.reference_max_trace_drift = std::max(st.reference_max_trace_drift, d);
  st.reference_min_eigenvalue = *std::min_element(ref.min_eigenvalue.begin(), ref.min_eigenvalue.end());
  st.innovation_mean = total.innovation_mean;
  st.innovation_variance = total.innovation_variance;
  st.jump_count = total.jump_count;
  st.expected_jumps = ref.integrated_counting_rate;
  st.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return st;
}

struct ObservableConvergence {
  std::string name;
  double max_abs_deviation = 0.0;  // max |mean - reference| / std_error
  double fraction_within = 0.0;    // share of samples with |deviation| <= sigma_bound
  bool pass = false;
};

struct ConvergenceReport {
  double sigma_bound = 3.0;
  double required_fraction = 0.99;
  std::vector<ObservableConvergence> observables;
  bool pass = false;
};

inline ConvergenceReport convergence_report(const EnsembleStats& st, double sigma_bound = 3.0,
                                            double required_fraction = 0.99) {
  ConvergenceReport rep;
  rep.sigma_bound = sigma_bound;
  rep.required_fraction = required_fraction;
  rep.pass = true;
  for (std::size_t j = 0; j < st.names.size(); ++j) {
    ObservableConvergence oc;
    oc.name = st.names[j];
    std::size_t within = 0;
    for (double d : st.deviation[j]) {
      oc.max_abs_deviation = std::max(oc.max_abs_deviation, std::abs(d));
      if (std::abs(d) <= sigma_bound) ++within;
    }
    oc.fraction_within = st.deviation[j].empty() ? 1.0 : static_cast<double>(within) / static_cast<double>(st.deviation[j].size());
    oc.pass = oc.fraction_within >= required_fraction;
    rep.pass = rep.pass && oc.pass;
    rep.observables.push_back(std::move(oc));
  }
  return rep;
}

}  // namespace cmptraj

#endif  // CMPTRAJ_ENSEMBLE_HPP
