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

// Conditional (filtered) evolution of the joint system (x) source state under
// continuous homodyne or photon-counting measurement of the output field.
//
// Two discretizations are provided for each unravelling.
//
// euler_maruyama: rho + L*rho dt + (L rho + rho L* - lambda rho) dW with
//   dW ~ N(0, dt), renormalized; coefficients at the left end of the step.
//   Jumps: L rho L* / nu; no-jump drift rho + dt (nu rho - K rho - rho K*).
//
// kraus: rho -> N rho N* / tr(N rho N*) with N(y) = P0 + P1 y + P2 y^2,
//   P0 = I - K dt + 1/2 K^2 dt^2 - 1/2 L^2 dt,  P1 = L - dt/2 (KL + LK),  P2 = 1/2 L^2,
//   K = iH + 1/2 L*L, coefficients at the step midpoint. Averaged over y ~ N(0, dt)
//   the map N rho N* is exp(dt L*) up to O(dt^3). The increment dY = y is drawn
//   from the outcome law tr(N(y) rho N(y)*) N(0, dt)(y) itself, so the ensemble
//   mean follows that channel exactly while every conditional state stays positive
//   and pure states stay pure. Counting uses I - K dt and sqrt(dt) L at the midpoint.
//
// The increment dY is formed before the state update and the update reads only
// dY, so replaying a record repeats exactly the same arithmetic.

#ifndef CMPTRAJ_TRAJECTORY_HPP
#define CMPTRAJ_TRAJECTORY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "master.hpp"
#include "operator.hpp"
#include "rng.hpp"
#include "slh.hpp"
#include "wavepacket.hpp"

namespace cmptraj {

enum class MeasurementKind { homodyne, counting };
enum class Scheme { kraus, euler_maruyama };

inline const char* to_string(MeasurementKind k) { return k == MeasurementKind::homodyne ? "homodyne" : "counting"; }
inline const char* to_string(Scheme s) { return s == Scheme::kraus ? "kraus" : "euler_maruyama"; }

// Fraction of the step at which time-dependent coefficients are frozen.
inline double coefficient_offset(Scheme s) { return s == Scheme::kraus ? 0.5 : 0.0; }

struct MeasurementRecord {
  MeasurementKind kind = MeasurementKind::homodyne;
  double dt = 0.0;
  std::size_t steps = 0;
  std::vector<double> increments;  // homodyne: dY of step k covers [k dt, (k+1) dt]
  std::vector<double> jump_times;  // counting: end time of each step that contained a jump

  void validate() const {
    if (!(dt > 0.0) || steps == 0) throw ValidationError("record: dt and step count must be positive");
    if (kind == MeasurementKind::homodyne) {
      if (increments.size() != steps) throw ValidationError("record: expected one increment per step");
      for (std::size_t k = 0; k < steps; ++k)
        if (!std::isfinite(increments[k])) throw ValidationError("record: non-finite increment at step " + std::to_string(k));
    } else {
      const double t_max = dt * static_cast<double>(steps);
      for (std::size_t j = 0; j < jump_times.size(); ++j) {
        const double t = jump_times[j];
        if (!(t > 0.0) || t > t_max * (1.0 + 1e-12)) throw ValidationError("record: jump time outside [0, T_max]");
        if (j > 0 && !(t > jump_times[j - 1])) throw ValidationError("record: jump times must be strictly increasing");
      }
    }
  }
};

// Cascade coefficients frozen for one step.
struct StepCoefficients {
  Operator L;
  Operator LpLd;         // L + L*
  Operator LdL;          // L*L
  Operator K;            // iH + 1/2 L*L
  Operator I_minus_Kdt;  // I - K dt
  Operator P0, P1, P2;   // homodyne Kraus polynomial

  static StepCoefficients from(const SlhValues& v, double dt) {
    StepCoefficients c;
    const Index n = v.dim();
    c.L = v.L;
    c.LpLd = v.L + v.L.adjoint();
    c.LdL = v.L.adjoint() * v.L;
    c.K = kI * v.H + 0.5 * c.LdL;
    c.I_minus_Kdt = identity(n) - dt * c.K;
    const Operator ll = v.L * v.L;
    c.P0 = c.I_minus_Kdt + (0.5 * dt * dt) * (c.K * c.K) - (0.5 * dt) * ll;
    c.P1 = v.L - (0.5 * dt) * (c.K * v.L + v.L * c.K);
    c.P2 = 0.5 * ll;
    return c;
  }
};

// Per-step coefficients of a cascade at t_k = (k + offset) dt. Held in memory
// when small enough, otherwise evaluated on demand.
class CascadeTable {
 public:
  static constexpr std::size_t kMaxCachedEntries = std::size_t{1} << 24;

  CascadeTable(SLHTriple cascade, double dt, std::size_t steps, double offset = 0.0)
      : triple_(std::move(cascade)), dt_(dt), steps_(steps), offset_(offset) {
    const auto d = static_cast<std::size_t>(triple_.dim());
    if (steps_ * 8 * d * d <= kMaxCachedEntries) {
      table_.reserve(steps_);
      for (std::size_t k = 0; k < steps_; ++k) table_.push_back(compute(k));
    }
  }

  const StepCoefficients& get(std::size_t k, StepCoefficients& scratch) const {
    if (!table_.empty()) return table_[k];
    scratch = compute(k);
    return scratch;
  }

  double dt() const noexcept { return dt_; }
  std::size_t steps() const noexcept { return steps_; }
  double offset() const noexcept { return offset_; }
  Index dim() const noexcept { return triple_.dim(); }
  const SLHTriple& triple() const noexcept { return triple_; }

 private:
  StepCoefficients compute(std::size_t k) const {
    return StepCoefficients::from(triple_.at((static_cast<double>(k) + offset_) * dt_), dt_);
  }

  SLHTriple triple_;
  double dt_;
  std::size_t steps_;
  double offset_;
  std::vector<StepCoefficients> table_;
};

// ---- filter matrices and rates ---------------------------------------------

// The D x D grid of system blocks of the conditional state; block (n, m)
// contracted with X gives Pi^{nm}(X).
inline BlockGrid homodyne_filter_matrix(const JointState& state) { return matrix_entries(state.rho, state.layout); }
inline BlockGrid counting_filter_matrix(const JointState& state) { return matrix_entries(state.rho, state.layout); }

// lambda = tr(rho (L~ + L~*)).
inline double homodyne_rate(const Operator& rho, const Operator& l_joint) {
  return trace_product(rho, l_joint + l_joint.adjoint()).real();
}

// nu = tr(rho L~* L~).
inline double counting_rate(const Operator& rho, const Operator& l_joint) {
  return trace_product(rho, l_joint.adjoint() * l_joint).real();
}

// lambda = tr{Pi(L + L*) + R Pi(S) + Pi(S*) R*}.
inline double homodyne_rate_matrix_form(const BlockGrid& pi, const SlhValues& sys, const Operator& r) {
  const cplx v = pi.contract(sys.L + sys.L.adjoint()).trace() + (r * pi.contract(sys.S)).trace() +
                 (pi.contract(sys.S.adjoint()) * r.adjoint()).trace();
  return v.real();
}

// nu = tr{Pi(L*L) + R Pi(L*S) + Pi(S*L) R* + R Pi(I) R*}.
inline double counting_rate_matrix_form(const BlockGrid& pi, const SlhValues& sys, const Operator& r) {
  const Operator ld = sys.L.adjoint();
  const Operator id = identity(sys.dim());
  const cplx v = pi.contract(ld * sys.L).trace() + (r * pi.contract(ld * sys.S)).trace() +
                 (pi.contract(sys.S.adjoint() * sys.L) * r.adjoint()).trace() +
                 (r * pi.contract(id) * r.adjoint()).trace();
  return v.real();
}

// ---- outcome law of the homodyne Kraus step ---------------------------------

// Density proportional to g(s) phi(s), g(s) = sum_m b[m] s^m >= 0, phi the standard
// normal density. Returned by inversion of the distribution function at the
// quantile of the standard normal sample xi, so xi -> s is monotone.
inline double sample_polynomial_gaussian(const std::array<double, 5>& b, double xi) {
  constexpr double kInvSqrt2Pi = 0.3989422804014327;
  const double mass = b[0] + b[2] + 3.0 * b[4];
  if (!(mass > 0.0) || !std::isfinite(mass)) throw NumericalError(0.0, "homodyne outcome law has no mass");
  const bool lower = xi <= 0.0;
  // Tail mass below s (lower) or above s (upper), via int s^m phi recursions.
  const auto tail = [&](double s) {
    const double ph = kInvSqrt2Pi * std::exp(-0.5 * s * s);
    std::array<double, 5> g{};
    if (lower) {
      g[0] = 0.5 * std::erfc(-s / std::numbers::sqrt2);
      g[1] = -ph;
      for (int m = 2; m < 5; ++m) g[m] = -std::pow(s, m - 1) * ph + (m - 1) * g[m - 2];
    } else {
      g[0] = 0.5 * std::erfc(s / std::numbers::sqrt2);
      g[1] = ph;
      for (int m = 2; m < 5; ++m) g[m] = std::pow(s, m - 1) * ph + (m - 1) * g[m - 2];
    }
    double acc = 0.0;
    for (int m = 0; m < 5; ++m) acc += b[m] * g[m];
    return acc;
  };
  const auto density = [&](double s) {
    const double poly = b[0] + s * (b[1] + s * (b[2] + s * (b[3] + s * b[4])));
    return std::max(poly, 0.0) * kInvSqrt2Pi * std::exp(-0.5 * s * s);
  };
  const double target = mass * 0.5 * std::erfc((lower ? -xi : xi) / std::numbers::sqrt2);
  // h increasing in s with a root at the sample.
  const auto h = [&](double s) { return lower ? tail(s) - target : target - tail(s); };

  double s = xi + b[1] / mass;
  double lo = s - 1.0, hi = s + 1.0;
  while (h(lo) > 0.0) lo -= 2.0 * (hi - lo);
  while (h(hi) < 0.0) hi += 2.0 * (hi - lo);
  for (int it = 0; it < 100; ++it) {
    const double hv = h(s);
    if (hv == 0.0) return s;
    (hv < 0.0 ? lo : hi) = s;
    const double d = density(s);
    double next = d > 0.0 ? s - hv / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= 1e-15 * (1.0 + std::abs(s)) || hi - lo <= 1e-15 * (1.0 + std::abs(s))) return next;
    s = next;
  }
  return s;
}

// ---- single steps ------------------------------------------------------------

struct StepDiagnostics {
  double rate = 0.0;           // lambda (homodyne) or nu (counting) at the start of the step
  double trace_drift = 0.0;    // |tr - 1| of the updated state before the final renormalization
  double normalization = 0.0;  // |N - 1| for the normalization N divided out by the step
  bool jumped = false;
};

namespace detail {

struct Workspace {
  Operator a, b, m, x0, x1, x2;
  explicit Workspace(Index n) : a(n, n), b(n, n), m(n, n), x0(n, n), x1(n, n), x2(n, n) {}
};

inline void hermitize_and_normalize(Operator& rho, Workspace& ws, StepDiagnostics& diag, double t_next) {
  const double tr = rho.trace().real();
  diag.trace_drift = std::abs(tr - 1.0);
  if (!std::isfinite(tr) || !(tr > 0.0)) throw NumericalError(t_next, "state trace collapsed to " + std::to_string(tr));
  ws.a = rho.adjoint();
  rho = (0.5 / tr) * (rho + ws.a);
}

inline void finish_kraus(Operator& rho, Workspace& ws, StepDiagnostics& diag, double t_next) {
  const double n = rho.trace().real();
  if (!std::isfinite(n) || !(n > 0.0)) throw NumericalError(t_next, "measurement map annihilated the state");
  diag.normalization = std::abs(n - 1.0);
  rho /= n;
  hermitize_and_normalize(rho, ws, diag, t_next);
}

// sum_ab x_ab conj(p_ab) = tr(x p*)
inline double trace_adjoint_product(const Operator& x, const Operator& p) {
  return (x.array() * p.array().conjugate()).sum().real();
}

// Homodyne Kraus step, first half: x_i = P_i rho and the outcome polynomial
// tr(N(y) rho N(y)*) = sum_m a[m] y^m.
inline std::array<double, 5> homodyne_law(const Operator& rho, const StepCoefficients& c, Workspace& ws) {
  ws.x0.noalias() = c.P0 * rho;
  ws.x1.noalias() = c.P1 * rho;
  ws.x2.noalias() = c.P2 * rho;
  const double t00 = trace_adjoint_product(ws.x0, c.P0), t11 = trace_adjoint_product(ws.x1, c.P1);
  const double t22 = trace_adjoint_product(ws.x2, c.P2);
  const double t01 = trace_adjoint_product(ws.x0, c.P1), t02 = trace_adjoint_product(ws.x0, c.P2);
  const double t12 = trace_adjoint_product(ws.x1, c.P2);
  return {t00, 2.0 * t01, t11 + 2.0 * t02, 2.0 * t12, t22};
}

// Draws dY from the Kraus outcome law given a standard normal sample.
inline double homodyne_kraus_increment(const std::array<double, 5>& a, double dt, double xi) {
  const double sdt = std::sqrt(dt);
  std::array<double, 5> b{};
  double scale = 1.0;
  for (int m = 0; m < 5; ++m, scale *= sdt) b[m] = a[m] * scale;
  return sdt * sample_polynomial_gaussian(b, xi);
}

// rho <- homodyne update for observed dY; for kraus, homodyne_law must have filled ws.x*.
inline void homodyne_update(Operator& rho, const StepCoefficients& c, double dt, double dy, double lambda,
                            Scheme scheme, Workspace& ws, StepDiagnostics& diag, double t_next) {
  if (scheme == Scheme::kraus) {
    ws.m = c.P0 + dy * c.P1 + (dy * dy) * c.P2;
    ws.a = ws.x0 + dy * ws.x1 + (dy * dy) * ws.x2;
    rho.noalias() = ws.a * ws.m.adjoint();
    finish_kraus(rho, ws, diag, t_next);
  } else {
    const double dw = dy - lambda * dt;
    ws.a.noalias() = c.L * rho;
    ws.b.noalias() = ws.a * c.L.adjoint();
    ws.m.noalias() = c.K * rho;
    ws.b -= ws.m + ws.m.adjoint();
    rho = rho + dt * ws.b + dw * (ws.a + ws.a.adjoint() - lambda * rho);
    diag.normalization = std::abs(rho.trace().real() - 1.0);
    hermitize_and_normalize(rho, ws, diag, t_next);
  }
}

inline void counting_update(Operator& rho, const StepCoefficients& c, double dt, bool jump, double nu, Scheme scheme,
                            Workspace& ws, StepDiagnostics& diag, double t_next) {
  if (jump) {
    ws.a.noalias() = c.L * rho;
    rho.noalias() = ws.a * c.L.adjoint();
    rho /= nu;
    diag.normalization = std::abs(rho.trace().real() - 1.0);
    hermitize_and_normalize(rho, ws, diag, t_next);
  } else if (scheme == Scheme::kraus) {
    ws.a.noalias() = c.I_minus_Kdt * rho;
    rho.noalias() = ws.a * c.I_minus_Kdt.adjoint();
    finish_kraus(rho, ws, diag, t_next);
  } else {
    ws.m.noalias() = c.K * rho;
    rho = rho + dt * (nu * rho - ws.m - ws.m.adjoint());
    diag.normalization = std::abs(rho.trace().real() - 1.0);
    hermitize_and_normalize(rho, ws, diag, t_next);
  }
}

}  // namespace detail

inline constexpr double kDefaultEpsNu = 1e-12;

// One homodyne step from state.t with a standard normal sample. Returns the new state and dY.
inline std::pair<JointState, double> homodyne_step(const JointState& state, const SLHTriple& cascade, double dt,
                                                   double noise, Scheme scheme = Scheme::kraus) {
  if (!(dt > 0.0)) throw ValidationError("homodyne_step: dt must be positive");
  detail::require_joint(state.rho, state.layout, "homodyne_step");
  if (cascade.dim() != state.layout.joint()) throw DimensionError("homodyne_step: cascade/state dimension mismatch");
  const StepCoefficients c = StepCoefficients::from(cascade.at(state.t + coefficient_offset(scheme) * dt), dt);
  JointState next = state;
  next.t = state.t + dt;
  detail::Workspace ws(c.L.rows());
  StepDiagnostics diag;
  const double lambda = trace_product(state.rho, c.LpLd).real();
  double dy = 0.0;
  if (scheme == Scheme::kraus) {
    dy = detail::homodyne_kraus_increment(detail::homodyne_law(state.rho, c, ws), dt, noise);
  } else {
    dy = lambda * dt + std::sqrt(dt) * noise;
  }
  detail::homodyne_update(next.rho, c, dt, dy, lambda, scheme, ws, diag, next.t);
  if (scheme == Scheme::euler_maruyama && diag.normalization > 1e-3) {
    throw NumericalError(next.t, "homodyne_step: trace drift " + std::to_string(diag.normalization) + " (step too large)");
  }
  return {std::move(next), dy};
}

// One counting step from state.t. A jump happens when nu >= eps_nu and uniform < nu dt.
inline std::pair<JointState, bool> counting_step(const JointState& state, const SLHTriple& cascade, double dt,
                                                 double uniform, Scheme scheme = Scheme::kraus,
                                                 double eps_nu = kDefaultEpsNu) {
  if (!(dt > 0.0)) throw ValidationError("counting_step: dt must be positive");
  detail::require_joint(state.rho, state.layout, "counting_step");
  if (cascade.dim() != state.layout.joint()) throw DimensionError("counting_step: cascade/state dimension mismatch");
  const StepCoefficients c = StepCoefficients::from(cascade.at(state.t + coefficient_offset(scheme) * dt), dt);
  JointState next = state;
  next.t = state.t + dt;
  detail::Workspace ws(c.L.rows());
  StepDiagnostics diag;
  const double nu = trace_product(state.rho, c.LdL).real();
  const bool jump = nu >= eps_nu && uniform < nu * dt;
  detail::counting_update(next.rho, c, dt, jump, nu, scheme, ws, diag, next.t);
  return {std::move(next), jump};
}

// ---- whole trajectories ------------------------------------------------------

struct TrajectoryConfig {
  MeasurementKind kind = MeasurementKind::homodyne;
  Scheme scheme = Scheme::kraus;
  double dt = 1e-3;
  double t_max = 1.0;
  std::size_t samples = 0;  // output samples; 0 = every step
  double eps_nu = kDefaultEpsNu;
  double max_trace_drift = 1e-3;  // per-step blow-up threshold (euler_maruyama)
  bool keep_states = false;       // store the joint state at every sample
  std::vector<NamedObservable> observables;

  std::size_t steps() const { return steps_for(t_max, dt); }
};

struct TrajectoryResult {
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // [observable][sample]
  std::vector<double> trace_drift;          // max per-step drift since the previous sample
  std::vector<double> normalization;        // max |N - 1| since the previous sample
  std::vector<double> min_eigenvalue;
  std::vector<double> purity;
  std::vector<double> rates;  // lambda or nu used in each step
  std::vector<JointState> states;
  MeasurementRecord record;
  std::size_t jumps = 0;
  double max_trace_drift = 0.0;
  JointState final_state;
};

namespace detail {

struct HomodyneDraw {
  const std::array<double, 5>* law;  // kraus outcome polynomial, null for euler_maruyama
  double lambda;
};

// Shared driver for generated and replayed trajectories. homodyne(k, HomodyneDraw)
// returns dY; counting(k, nu) returns whether step k contains a jump.
template <class HomodyneDrive, class CountingDrive>
TrajectoryResult integrate_trajectory(const CascadeTable& table, JointState state, const TrajectoryConfig& cfg,
                                      HomodyneDrive&& homodyne, CountingDrive&& counting) {
  const std::size_t steps = table.steps();
  const double dt = table.dt();
  const std::vector<std::size_t> schedule = sample_schedule(steps, cfg.samples);
  const Index ds = state.layout.dim_sys;
  for (const auto& o : cfg.observables) detail::require_same_dim(o.op, identity(ds), "trajectory observable");

  TrajectoryResult out;
  out.record.kind = cfg.kind;
  out.record.dt = dt;
  out.record.steps = steps;
  if (cfg.kind == MeasurementKind::homodyne) out.record.increments.resize(steps);
  out.rates.resize(steps);
  for (const auto& o : cfg.observables) out.names.push_back(o.name);
  out.values.resize(cfg.observables.size());

  double drift_window = 0.0, norm_window = 0.0;
  const auto sample = [&](const JointState& s) {
    out.times.push_back(s.t);
    const Operator marginal = partial_trace_aux(s.rho, s.layout);
    for (std::size_t j = 0; j < cfg.observables.size(); ++j)
      out.values[j].push_back(trace_product(marginal, cfg.observables[j].op).real());
    out.trace_drift.push_back(drift_window);
    out.normalization.push_back(norm_window);
    out.min_eigenvalue.push_back(min_eigenvalue(s.rho));
    out.purity.push_back(purity(s.rho));
    if (cfg.keep_states) out.states.push_back(s);
    drift_window = 0.0;
    norm_window = 0.0;
  };

  Workspace ws(state.rho.rows());
  StepCoefficients scratch;
  sample(state);
  std::size_t next_sample = 1;
  for (std::size_t k = 0; k < steps; ++k) {
    const StepCoefficients& c = table.get(k, scratch);
    const double t_next = static_cast<double>(k + 1) * dt;
    StepDiagnostics diag;
    if (cfg.kind == MeasurementKind::homodyne) {
      const double lambda = trace_product(state.rho, c.LpLd).real();
      std::array<double, 5> law{};
      if (cfg.scheme == Scheme::kraus) law = homodyne_law(state.rho, c, ws);
      const double dy = homodyne(k, HomodyneDraw{cfg.scheme == Scheme::kraus ? &law : nullptr, lambda});
      out.rates[k] = lambda;
      out.record.increments[k] = dy;
      homodyne_update(state.rho, c, dt, dy, lambda, cfg.scheme, ws, diag, t_next);
    } else {
      const double nu = trace_product(state.rho, c.LdL).real();
      const bool jump = counting(k, nu);
      out.rates[k] = nu;
      if (jump) {
        if (!(nu >= cfg.eps_nu)) {
          throw NumericalError(t_next, "jump with intensity " + std::to_string(nu) + " below the floor (empty field)");
        }
        out.record.jump_times.push_back(t_next);
        ++out.jumps;
      }
      counting_update(state.rho, c, dt, jump, nu, cfg.scheme, ws, diag, t_next);
    }
    if (cfg.scheme == Scheme::euler_maruyama && diag.normalization > cfg.max_trace_drift) {
      throw NumericalError(t_next, "trace drift " + std::to_string(diag.normalization) +
                                       " before renormalization; step too large");
    }
    state.t = t_next;
    drift_window = std::max(drift_window, diag.trace_drift);
    norm_window = std::max(norm_window, diag.normalization);
    out.max_trace_drift = std::max(out.max_trace_drift, diag.trace_drift);
    if (next_sample < schedule.size() && schedule[next_sample] == k + 1) {
      sample(state);
      ++next_sample;
    }
  }
  out.final_state = std::move(state);
  return out;
}

}  // namespace detail

// Largest unconditional counting intensity along the deterministic solution on the same grid.
inline double max_mean_counting_rate(const SLHTriple& sys, const CmpGenerator& gen, const StateVector& eta, double dt,
                                     std::size_t steps) {
  MasterOptions mo;
  mo.dt = dt;
  mo.steps = steps;
  mo.samples = 1;
  return propagate(sys, gen, eta, mo, {}).max_counting_rate;
}

inline void validate_counting_dt(double dt, double max_rate) {
  if (dt * max_rate > 0.05) {
    throw ValidationError("dt * max counting rate = " + std::to_string(dt * max_rate) + " exceeds 0.05; reduce dt");
  }
}

inline CascadeTable make_cascade_table(const SLHTriple& sys, const CmpGenerator& gen, const TrajectoryConfig& cfg) {
  return CascadeTable(cascade_with(sys, gen), cfg.dt, cfg.steps(), coefficient_offset(cfg.scheme));
}

inline TrajectoryResult run_trajectory(const CascadeTable& table, const StateVector& eta, const CmpGenerator& gen,
                                       const TrajectoryConfig& cfg, const RandomStream& stream) {
  JointState s0 = init_joint(eta, gen);
  if (table.dim() != s0.layout.joint()) throw DimensionError("run_trajectory: cascade/state dimension mismatch");
  if (table.offset() != coefficient_offset(cfg.scheme)) throw ValidationError("run_trajectory: table built for another scheme");
  const double dt = table.dt();
  const double sdt = std::sqrt(dt);
  return detail::integrate_trajectory(
      table, std::move(s0), cfg,
      [&](std::size_t k, const detail::HomodyneDraw& d) {
        const double xi = stream.normal(k);
        return d.law ? detail::homodyne_kraus_increment(*d.law, dt, xi) : d.lambda * dt + sdt * xi;
      },
      [&](std::size_t k, double nu) { return nu >= cfg.eps_nu && stream.uniform(k) < nu * dt; });
}

// Self-generated measurement record from trajectory `index` of the stream keyed by `seed`.
// Counting runs check dt against the deterministic pre-run intensity first.
inline TrajectoryResult run_trajectory(const SLHTriple& sys, const CmpGenerator& gen, const StateVector& eta,
                                       const TrajectoryConfig& cfg, std::uint64_t seed, std::uint64_t index = 0) {
  if (cfg.kind == MeasurementKind::counting) {
    validate_counting_dt(cfg.dt, max_mean_counting_rate(sys, gen, eta, cfg.dt, cfg.steps()));
  }
  return run_trajectory(make_cascade_table(sys, gen, cfg), eta, gen, cfg, RandomStream(seed, index));
}

// Filters an externally supplied record; no noise is generated.
inline TrajectoryResult filter_replay(const SLHTriple& sys, const CmpGenerator& gen, const StateVector& eta,
                                      const MeasurementRecord& record, const TrajectoryConfig& cfg) {
  record.validate();
  const std::size_t steps = cfg.steps();
  if (record.kind != cfg.kind) throw ValidationError("replay: record kind does not match the measurement");
  if (record.steps != steps || std::abs(record.dt - cfg.dt) > 1e-15 * cfg.dt) {
    throw ValidationError("replay: record grid (" + std::to_string(record.steps) + " steps of " +
                          std::to_string(record.dt) + ") does not match the configured grid");
  }
  const CascadeTable table = make_cascade_table(sys, gen, cfg);
  std::vector<char> jump_at;
  if (cfg.kind == MeasurementKind::counting) {
    jump_at.assign(steps, 0);
    for (double t : record.jump_times) {
      const auto idx = static_cast<long long>(std::llround(t / cfg.dt)) - 1;
      if (idx < 0 || idx >= static_cast<long long>(steps)) throw ValidationError("replay: jump time off the grid");
      if (jump_at[static_cast<std::size_t>(idx)]) throw ValidationError("replay: two jumps in one step");
      jump_at[static_cast<std::size_t>(idx)] = 1;
    }
  }
  return detail::integrate_trajectory(
      table, init_joint(eta, gen), cfg,
      [&](std::size_t k, const detail::HomodyneDraw&) { return record.increments[k]; },
      [&](std::size_t k, double) { return jump_at[k] != 0; });
}

}  // namespace cmptraj

#endif  // CMPTRAJ_TRAJECTORY_HPP
