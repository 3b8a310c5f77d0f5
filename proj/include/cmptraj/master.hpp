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

// Unconditional evolution of the joint system (x) source density operator.
// The joint state is propagated with the Lindblad generator of the cascade
// triple; the D x D operator-valued matrix form of the master equation is
// recovered from it through matrix_entries and is available separately as
// matrix_master_rhs for cross-checking.

#ifndef CMPTRAJ_MASTER_HPP
#define CMPTRAJ_MASTER_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "operator.hpp"
#include "slh.hpp"
#include "wavepacket.hpp"

namespace cmptraj {

struct JointState {
  SpaceLayout layout;
  Operator rho;
  double t = 0.0;
};

struct NamedObservable {
  std::string name;
  Operator op;  // system-space operator
};

struct InvariantReport {
  double trace_drift = 0.0;   // |tr rho - 1|
  double hermiticity = 0.0;   // max |rho - rho*|
  double min_eigenvalue = 0.0;
};

inline InvariantReport check_invariants(const JointState& s) {
  InvariantReport r;
  r.trace_drift = std::abs(s.rho.trace() - cplx(1.0));
  r.hermiticity = (s.rho - s.rho.adjoint()).cwiseAbs().maxCoeff();
  r.min_eigenvalue = min_eigenvalue(s.rho);
  return r;
}

// rho = |eta><eta| (x) |phi><phi| at t = 0.
inline JointState init_joint(const StateVector& eta, const CmpGenerator& gen) {
  if (std::abs(eta.norm() - 1.0) > kDefaultTol) throw ValidationError("init_joint: eta must be a unit vector");
  const SpaceLayout layout(eta.size(), gen.dim());
  return JointState{layout, kron(projector(eta), projector(gen.phi())), 0.0};
}

inline SLHTriple cascade_with(const SLHTriple& sys, const CmpGenerator& gen) {
  return cascade(sys, gen.as_triple(), SpaceLayout(sys.dim(), gen.dim()));
}

// One classic RK4 step of d rho / dt = L~* rho, coefficients sampled at the stage times.
inline JointState master_step(const JointState& state, const SLHTriple& cascade_triple, double dt) {
  if (!(dt > 0.0)) throw ValidationError("master_step: dt must be positive");
  detail::require_joint(state.rho, state.layout, "master_step");
  if (cascade_triple.dim() != state.layout.joint()) throw DimensionError("master_step: triple/state dimension mismatch");
  const double t = state.t;
  const SlhValues v0 = cascade_triple.at(t);
  const SlhValues vh = cascade_triple.at(t + 0.5 * dt);
  const SlhValues v1 = cascade_triple.at(t + dt);
  const Operator k1 = lindblad_dual(v0, state.rho);
  const Operator k2 = lindblad_dual(vh, state.rho + (0.5 * dt) * k1);
  const Operator k3 = lindblad_dual(vh, state.rho + (0.5 * dt) * k2);
  const Operator k4 = lindblad_dual(v1, state.rho + dt * k3);
  JointState next{state.layout, state.rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), t + dt};
  const double before = state.rho.trace().real();
  const double after = next.rho.trace().real();
  if (!std::isfinite(after) || std::abs(after - before) > 1e-12 * std::max(1.0, std::abs(before))) {
    throw NumericalError(next.t, "master_step: trace not conserved (" + std::to_string(before) + " -> " +
                                     std::to_string(after) + "); step too large for the coupling rates");
  }
  return next;
}

inline JointState master_step(const JointState& state, const SLHTriple& sys, const CmpGenerator& gen, double dt) {
  return master_step(state, cascade_with(sys, gen), dt);
}

// tr(rho (X (x) I)).
inline cplx cmp_expectation(const JointState& state, const Operator& x) {
  detail::require_same_dim(x, identity(state.layout.dim_sys), "cmp_expectation");
  return trace_product(partial_trace_aux(state.rho, state.layout), x);
}

// Upsilon^{nm}(X) = tr(rho (X (x) E_mn)) with E_mn = |e_m><e_n|; its trace is cmp_expectation.
inline Operator upsilon_matrix(const JointState& state, const Operator& x) {
  detail::require_same_dim(x, identity(state.layout.dim_sys), "upsilon_matrix");
  return matrix_entries(state.rho, state.layout).contract(x);
}

// Source-space dual generator R A R* - 1/2 {A, R*R} + i [A, H_aux].
inline Operator source_dual(const Operator& a, const Operator& r, const Operator& h_aux) {
  const Operator rdr = r.adjoint() * r;
  return r * a * r.adjoint() - 0.5 * (a * rdr + rdr * a) + kI * (a * h_aux - h_aux * a);
}

// Right side of the operator-valued matrix master equation, assembled term by term:
//   Y(L00 X) + R Y(L01 X) + Y(L10 X) R* + R Y(L11 X) R* + [source dual of Y(X)].
inline Operator matrix_master_rhs(const JointState& state, const SlhValues& sys, const Operator& r,
                                  const Operator& h_aux, const Operator& x) {
  const BlockGrid grid = matrix_entries(state.rho, state.layout);
  const auto ups = [&](const Operator& y) { return grid.contract(y); };
  const Operator rd = r.adjoint();
  return ups(evans_hudson(sys, EvansHudson::k00, x)) + r * ups(evans_hudson(sys, EvansHudson::k01, x)) +
         ups(evans_hudson(sys, EvansHudson::k10, x)) * rd + r * ups(evans_hudson(sys, EvansHudson::k11, x)) * rd +
         source_dual(ups(x), r, h_aux);
}

inline Operator matrix_master_rhs(const JointState& state, const SLHTriple& sys, const CmpGenerator& gen,
                                  const Operator& x) {
  return matrix_master_rhs(state, sys.at(state.t), gen.R(state.t), gen.H_aux(state.t), x);
}

// Step indices round(j * steps / samples), j = 0 .. samples, without duplicates.
// samples = 0 means every step.
inline std::vector<std::size_t> sample_schedule(std::size_t steps, std::size_t samples) {
  std::vector<std::size_t> out;
  if (samples == 0 || samples >= steps) {
    out.resize(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) out[k] = k;
    return out;
  }
  for (std::size_t j = 0; j <= samples; ++j) {
    const std::size_t k = (j * steps + samples / 2) / samples;
    if (out.empty() || out.back() != k) out.push_back(k);
  }
  return out;
}

// steps = T_max / dt, which must be an integer within rounding.
inline std::size_t steps_for(double t_max, double dt) {
  if (!(dt > 0.0) || !(t_max > 0.0)) throw ValidationError("dt and t_max must be positive");
  const double r = t_max / dt;
  const double n = std::round(r);
  if (n < 1.0 || std::abs(r - n) > 1e-9 * std::max(1.0, r)) {
    throw ValidationError("dt = " + std::to_string(dt) + " does not divide t_max = " + std::to_string(t_max));
  }
  return static_cast<std::size_t>(n);
}

struct MasterOptions {
  double dt = 1e-3;
  std::size_t steps = 0;
  std::size_t samples = 0;  // output samples; 0 = every step
  double trace_tol = 1e-9;
  double eig_floor = -1e-8;
  bool check_positivity = true;
};

struct MasterResult {
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // [observable][sample]
  std::vector<double> trace_drift;
  std::vector<double> min_eigenvalue;
  std::vector<std::vector<double>> aux_populations;  // [sample][aux level]
  std::vector<double> homodyne_rate;                 // tr(rho (L~ + L~*)) at samples
  std::vector<double> counting_rate;                 // tr(rho L~* L~) at samples
  double max_counting_rate = 0.0;                    // over every step
  double integrated_counting_rate = 0.0;             // trapezoid of tr(rho L~* L~) over every step
  JointState final_state;
};

// Integrates the joint master equation on [0, steps * dt] and samples it on
// sample_schedule(steps, samples). Throws NumericalError when the
// trace or positivity invariant is violated.
inline MasterResult propagate(const SLHTriple& sys, const CmpGenerator& gen, const StateVector& eta,
                              const MasterOptions& opts, const std::vector<NamedObservable>& observables) {
  if (opts.steps == 0) throw ValidationError("propagate: steps must be positive");
  const std::vector<std::size_t> schedule = sample_schedule(opts.steps, opts.samples);
  const SLHTriple joint = cascade_with(sys, gen);
  JointState state = init_joint(eta, gen);
  for (const auto& o : observables) detail::require_same_dim(o.op, identity(sys.dim()), "propagate observable");

  MasterResult out;
  for (const auto& o : observables) out.names.push_back(o.name);
  out.values.resize(observables.size());

  const auto sample = [&](const JointState& s, const SlhValues& v) {
    const InvariantReport inv = check_invariants(s);
    if (!(inv.trace_drift <= opts.trace_tol)) {
      throw NumericalError(s.t, "trace drift " + std::to_string(inv.trace_drift) + " exceeds tolerance");
    }
    if (opts.check_positivity && !(inv.min_eigenvalue >= opts.eig_floor)) {
      throw NumericalError(s.t, "positivity violated (min eigenvalue " + std::to_string(inv.min_eigenvalue) + ")");
    }
    out.times.push_back(s.t);
    out.trace_drift.push_back(inv.trace_drift);
    out.min_eigenvalue.push_back(inv.min_eigenvalue);
    const Operator sys_marginal = partial_trace_aux(s.rho, s.layout);
    for (std::size_t k = 0; k < observables.size(); ++k) {
      out.values[k].push_back(trace_product(sys_marginal, observables[k].op).real());
    }
    const Operator aux_marginal = partial_trace_sys(s.rho, s.layout);
    std::vector<double> pops(static_cast<std::size_t>(aux_marginal.rows()));
    for (Index a = 0; a < aux_marginal.rows(); ++a) pops[static_cast<std::size_t>(a)] = aux_marginal(a, a).real();
    out.aux_populations.push_back(std::move(pops));
    out.homodyne_rate.push_back(trace_product(s.rho, v.L + v.L.adjoint()).real());
    out.counting_rate.push_back(trace_product(s.rho, v.L.adjoint() * v.L).real());
  };

  SlhValues v = joint.at(0.0);
  sample(state, v);
  double prev_rate = out.counting_rate.front();
  std::size_t next_sample = 1;
  for (std::size_t k = 1; k <= opts.steps; ++k) {
    state = master_step(state, joint, opts.dt);
    state.t = static_cast<double>(k) * opts.dt;
    v = joint.at(state.t);
    const double rate = trace_product(state.rho, v.L.adjoint() * v.L).real();
    out.max_counting_rate = std::max(out.max_counting_rate, rate);
    out.integrated_counting_rate += 0.5 * opts.dt * (prev_rate + rate);
    prev_rate = rate;
    if (next_sample < schedule.size() && schedule[next_sample] == k) {
      sample(state, v);
      ++next_sample;
    }
  }
  out.max_counting_rate =
      std::max(out.max_counting_rate, out.counting_rate.empty() ? 0.0 : out.counting_rate.front());
  out.final_state = std::move(state);
  return out;
}

}  // namespace cmptraj

#endif  // CMPTRAJ_MASTER_HPP
