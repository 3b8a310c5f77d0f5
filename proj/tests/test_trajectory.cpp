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


#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include <cmptraj/trajectory.hpp>

#include "support.hpp"

namespace cmptraj {
namespace {

using testing::max_abs;

// Superoperator of the Lindblad generator on column-stacked rho.
Operator lindblad_super(const SlhValues& v) {
  const Index n = v.dim();
  Operator out(n * n, n * n);
  for (Index c = 0; c < n * n; ++c) {
    Operator e = Operator::Zero(n, n);
    e(c % n, c / n) = 1.0;
    const Operator d = lindblad_dual(v, e);
    for (Index r = 0; r < n * n; ++r) out(r, c) = d(r % n, r / n);
  }
  return out;
}

Operator expm_taylor(const Operator& a) {
  Operator term = Operator::Identity(a.rows(), a.cols()), acc = term;
  for (int k = 1; k < 30; ++k) {
    term = term * a / static_cast<double>(k);
    acc += term;
  }
  return acc;
}

Operator apply_super(const Operator& s, const Operator& rho) {
  const Index n = rho.rows();
  Eigen::VectorXcd v(n * n);
  for (Index c = 0; c < n * n; ++c) v(c) = rho(c % n, c / n);
  const Eigen::VectorXcd w = s * v;
  Operator out(n, n);
  for (Index c = 0; c < n * n; ++c) out(c % n, c / n) = w(c);
  return out;
}

// Probabilists' Gauss-Hermite nodes and weights for 5 points (exact to degree 9).
constexpr std::array<double, 5> kGhNodes{-2.856970013872805, -1.355626179974266, 0.0, 1.355626179974266,
                                         2.856970013872805};
constexpr std::array<double, 5> kGhWeights{0.011257411327720691, 0.22207592200561266, 0.5333333333333333,
                                           0.22207592200561266, 0.011257411327720691};

// Kraus operator of the homodyne step coded from its definition.
Operator kraus_operator(const SlhValues& v, double dt, double y) {
  const Index n = v.dim();
  const Operator k = kI * v.H + 0.5 * v.L.adjoint() * v.L;
  const Operator ll = v.L * v.L;
  return Operator::Identity(n, n) - dt * k + 0.5 * dt * dt * k * k - 0.5 * dt * ll +
         (v.L - 0.5 * dt * (k * v.L + v.L * k)) * y + 0.5 * ll * y * y;
}

// Average of N(y) rho N(y)* over y ~ N(0, dt).
Operator mean_kraus_channel(const SlhValues& v, const Operator& rho, double dt) {
  Operator acc = Operator::Zero(rho.rows(), rho.cols());
  for (std::size_t q = 0; q < kGhNodes.size(); ++q) {
    const Operator m = kraus_operator(v, dt, std::sqrt(dt) * kGhNodes[q]);
    acc += kGhWeights[q] * (m * rho * m.adjoint());
  }
  return acc;
}

SlhValues random_system(std::mt19937_64& g, Index n) {
  return SlhValues{identity(n), testing::random_matrix(g, n), testing::random_hermitian(g, n)};
}

TEST(Kraus, MeanChannelIsSecondOrder) {
  std::mt19937_64 g(31);
  for (int trial = 0; trial < 5; ++trial) {
    const SlhValues v = random_system(g, 3);
    const Operator rho = testing::random_density(g, 3);
    const Operator gen = lindblad_super(v);
    double prev = 0.0;
    for (double dt : {4e-3, 2e-3, 1e-3}) {
      const double err = max_abs(mean_kraus_channel(v, rho, dt) - apply_super(expm_taylor(dt * gen), rho));
      if (prev > 0.0) {
        EXPECT_GT(prev / err, 6.0) << "local error must scale as dt^3";
      }
      prev = err;
    }
  }
}

TEST(Kraus, OutcomeLawMatchesDirectTrace) {
  std::mt19937_64 g(32);
  const SlhValues v = random_system(g, 2);
  const double dt = 1e-2;
  const StepCoefficients c = StepCoefficients::from(v, dt);
  const Operator rho = testing::random_density(g, 2);
  detail::Workspace ws(2);
  const auto a = detail::homodyne_law(rho, c, ws);
  for (double y : {-0.3, -0.05, 0.0, 0.1, 0.4}) {
    const Operator m = kraus_operator(v, dt, y);
    double poly = 0.0;
    for (int k = 4; k >= 0; --k) poly = poly * y + a[static_cast<std::size_t>(k)];
    EXPECT_NEAR(poly, (m * rho * m.adjoint()).trace().real(), 1e-13);
  }
  // The law integrates to 1 + O(dt^3) against N(0, dt).
  EXPECT_NEAR(a[0] + a[2] * dt + 3.0 * a[4] * dt * dt, 1.0, 50.0 * dt * dt * dt);
}

double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return acc * h / 3.0;
}

TEST(PolynomialGaussian, PureGaussianIsIdentity) {
  for (double xi : {-7.0, -2.5, -0.3, 0.0, 0.8, 3.1, 8.0}) {
    EXPECT_NEAR(sample_polynomial_gaussian({1.0, 0.0, 0.0, 0.0, 0.0}, xi), xi, 1e-12 * (1.0 + std::abs(xi)));
  }
}

// F(s(xi)) = Phi(xi) for the density proportional to g(s) phi(s).
TEST(PolynomialGaussian, QuantileMatchesIntegratedDensity) {
  const std::vector<std::array<double, 5>> laws{
      {1.0, 0.4, 0.3, 0.0, 0.05}, {0.2, -0.6, 1.0, 0.0, 0.0}, {1.0, 2.0, 1.0, 0.0, 0.0}, {0.5, 0.1, 0.0, -0.1, 0.2}};
  const auto phi = [](double s) { return std::exp(-0.5 * s * s) / std::sqrt(2.0 * std::numbers::pi); };
  for (const auto& b : laws) {
    const auto g = [&](double s) { return b[0] + s * (b[1] + s * (b[2] + s * (b[3] + s * b[4]))); };
    const double mass = simpson([&](double s) { return g(s) * phi(s); }, -14.0, 14.0, 200000);
    EXPECT_NEAR(mass, b[0] + b[2] + 3.0 * b[4], 1e-10);
    double prev = -1e300;
    for (double xi : {-3.0, -1.2, -0.2, 0.0, 0.5, 1.7, 3.0}) {
      const double s = sample_polynomial_gaussian(b, xi);
      EXPECT_GT(s, prev);
      prev = s;
      const double cdf = simpson([&](double u) { return g(u) * phi(u); }, -14.0, s, 200000) / mass;
      EXPECT_NEAR(cdf, 0.5 * std::erfc(-xi / std::numbers::sqrt2), 1e-9) << "xi=" << xi;
    }
  }
}

TEST(PolynomialGaussian, RejectsEmptyLaw) {
  EXPECT_THROW(sample_polynomial_gaussian({0.0, 0.0, 0.0, 0.0, 0.0}, 0.1), NumericalError);
}

TEST(Rates, MatrixFormsMatchJointTraces) {
  std::mt19937_64 g(33);
  for (int trial = 0; trial < 30; ++trial) {
    const Index ds = 1 + trial % 3, d = 1 + (trial / 3) % 4;
    const SlhValues sys{testing::random_unitary(g, ds), testing::random_matrix(g, ds), testing::random_hermitian(g, ds)};
    const Operator r = testing::random_matrix(g, d);
    const SlhValues joint = cascade_values(sys, SlhValues{identity(d), r, Operator::Zero(d, d)});
    const JointState s{SpaceLayout(ds, d), testing::random_density(g, ds * d), 0.0};
    EXPECT_NEAR(homodyne_rate(s.rho, joint.L), homodyne_rate_matrix_form(homodyne_filter_matrix(s), sys, r), 1e-10);
    EXPECT_NEAR(counting_rate(s.rho, joint.L), counting_rate_matrix_form(counting_filter_matrix(s), sys, r), 1e-10);
  }
}

SLHTriple atom(double kappa) {
  return SLHTriple::constant(identity(2), std::sqrt(kappa) * sigma_minus(), Operator::Zero(2, 2));
}

TrajectoryConfig config(MeasurementKind kind, Scheme scheme, double dt, double t_max) {
  TrajectoryConfig tc;
  tc.kind = kind;
  tc.scheme = scheme;
  tc.dt = dt;
  tc.t_max = t_max;
  tc.samples = 0;
  tc.keep_states = true;
  return tc;
}

// With D = 1 and R = 0 the joint filter is the plain system filter; compare step by step.
TEST(VacuumReduction, KrausMatchesDirectFilter) {
  std::mt19937_64 g(34);
  const SlhValues v{identity(2), testing::random_matrix(g, 2), testing::random_hermitian(g, 2)};
  const SLHTriple sys = SLHTriple::constant(v.S, v.L, v.H);
  const StateVector eta = testing::random_state(g, 2);
  const TrajectoryConfig tc = config(MeasurementKind::homodyne, Scheme::kraus, 1e-3, 2.0);
  const TrajectoryResult r = run_trajectory(sys, vacuum_generator(), eta, tc, 99);
  Operator rho = projector(eta);
  double worst = 0.0;
  for (std::size_t k = 0; k < r.record.steps; ++k) {
    const Operator m = kraus_operator(v, tc.dt, r.record.increments[k]);
    rho = m * rho * m.adjoint();
    rho /= rho.trace().real();
    worst = std::max(worst, max_abs(r.states[k + 1].rho - rho));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(VacuumReduction, EulerMaruyamaMatchesDirectFilter) {
  std::mt19937_64 g(35);
  const SlhValues v{identity(2), testing::random_matrix(g, 2), testing::random_hermitian(g, 2)};
  const SLHTriple sys = SLHTriple::constant(v.S, v.L, v.H);
  const StateVector eta = testing::random_state(g, 2);
  const TrajectoryConfig tc = config(MeasurementKind::homodyne, Scheme::euler_maruyama, 1e-4, 0.5);
  const TrajectoryResult r = run_trajectory(sys, vacuum_generator(), eta, tc, 5);
  const RandomStream noise(5, 0);
  const Operator k = kI * v.H + 0.5 * v.L.adjoint() * v.L;
  Operator rho = projector(eta);
  double worst = 0.0;
  for (std::size_t j = 0; j < r.record.steps; ++j) {
    const double lambda = (rho * (v.L + v.L.adjoint())).trace().real();
    const double dw = std::sqrt(tc.dt) * noise.normal(j);
    rho = rho + tc.dt * (v.L * rho * v.L.adjoint() - k * rho - rho * k.adjoint()) +
          dw * (v.L * rho + rho * v.L.adjoint() - lambda * rho);
    rho = 0.5 * (rho + rho.adjoint()) / rho.trace().real();
    worst = std::max(worst, max_abs(r.states[j + 1].rho - rho));
    EXPECT_NEAR(r.record.increments[j], lambda * tc.dt + dw, 1e-15);
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Trajectory, KrausKeepsStatePureAndPositive) {
  std::mt19937_64 g(36);
  const SLHTriple sys = SLHTriple::constant(testing::random_unitary(g, 2), testing::random_matrix(g, 2),
                                            testing::random_hermitian(g, 2));
  const CmpGenerator gen =
      custom_generator(testing::random_matrix(g, 2), testing::random_hermitian(g, 2), testing::random_state(g, 2));
  TrajectoryConfig tc = config(MeasurementKind::homodyne, Scheme::kraus, 1e-3, 3.0);
  tc.keep_states = false;
  const TrajectoryResult r = run_trajectory(sys, gen, testing::random_state(g, 2), tc, 1);
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    EXPECT_NEAR(r.purity[i], 1.0, 1e-10);
    EXPECT_GE(r.min_eigenvalue[i], -1e-10);
  }
  EXPECT_LE(r.max_trace_drift, 1e-12);
}

TEST(Trajectory, SameSeedSameRecordDifferentIndexDiffers) {
  const TrajectoryConfig tc = config(MeasurementKind::homodyne, Scheme::kraus, 1e-3, 1.0);
  const auto a = run_trajectory(atom(1.0), vacuum_generator(), basis_vector(2, 0), tc, 17, 3);
  const auto b = run_trajectory(atom(1.0), vacuum_generator(), basis_vector(2, 0), tc, 17, 3);
  const auto c = run_trajectory(atom(1.0), vacuum_generator(), basis_vector(2, 0), tc, 17, 4);
  EXPECT_EQ(a.record.increments, b.record.increments);
  EXPECT_NE(a.record.increments, c.record.increments);
}

TEST(Trajectory, ReplayReproducesOwnRecord) {
  GeneratorOptions go;
  go.t_max = 12.0;
  const CmpGenerator gen = single_photon_generator(WavePacket::gaussian(4.0, 1.0), go);
  for (auto kind : {MeasurementKind::homodyne, MeasurementKind::counting})
    for (auto scheme : {Scheme::kraus, Scheme::euler_maruyama}) {
      TrajectoryConfig tc = config(kind, scheme, 1e-3, 12.0);
      tc.keep_states = false;
      tc.samples = 60;
      tc.observables = {{"pe", sigma_plus() * sigma_minus()}};
      const TrajectoryResult r = run_trajectory(atom(1.0), gen, basis_vector(2, 1), tc, 8);
      const TrajectoryResult p = filter_replay(atom(1.0), gen, basis_vector(2, 1), r.record, tc);
      EXPECT_EQ(r.values, p.values);
      EXPECT_EQ(r.jumps, p.jumps);
      EXPECT_EQ(r.final_state.rho, p.final_state.rho);
    }
}

TEST(Trajectory, ReplayRejectsMismatchedRecord) {
  TrajectoryConfig tc = config(MeasurementKind::homodyne, Scheme::kraus, 1e-2, 1.0);
  MeasurementRecord rec;
  rec.kind = MeasurementKind::homodyne;
  rec.dt = 1e-2;
  rec.steps = 50;
  rec.increments.assign(50, 0.0);
  EXPECT_THROW(filter_replay(atom(1.0), vacuum_generator(), basis_vector(2, 0), rec, tc), ValidationError);
  rec.steps = 100;
  rec.increments.assign(100, 0.0);
  tc.kind = MeasurementKind::counting;
  EXPECT_THROW(filter_replay(atom(1.0), vacuum_generator(), basis_vector(2, 0), rec, tc), ValidationError);
}

// A recorded click with an empty field is impossible under the filter.
TEST(Trajectory, JumpWithoutIntensityIsReported) {
  const TrajectoryConfig tc = config(MeasurementKind::counting, Scheme::kraus, 1e-2, 1.0);
  MeasurementRecord rec;
  rec.kind = MeasurementKind::counting;
  rec.dt = 1e-2;
  rec.steps = 100;
  rec.jump_times = {0.5};
  EXPECT_THROW(filter_replay(SLHTriple::trivial(1), vacuum_generator(), basis_vector(1, 0), rec, tc), NumericalError);
}

TEST(Counting, ExactlyOnePhotonPerTrajectory) {
  GeneratorOptions go;
  go.t_max = 12.0;
  const CmpGenerator gen = single_photon_generator(WavePacket::gaussian(4.0, 1.0), go);
  TrajectoryConfig tc = config(MeasurementKind::counting, Scheme::kraus, 1e-3, 12.0);
  tc.keep_states = false;
  tc.samples = 10;
  const CascadeTable table = make_cascade_table(SLHTriple::trivial(1), gen, tc);
  for (std::uint64_t i = 0; i < 40; ++i) {
    const TrajectoryResult r = run_trajectory(table, basis_vector(1, 0), gen, tc, RandomStream(4, i));
    EXPECT_EQ(r.jumps, 1u);
    ASSERT_EQ(r.record.jump_times.size(), 1u);
    // After the click the source is empty.
    EXPECT_NEAR(r.final_state.rho(1, 1).real(), 1.0, 1e-12);
  }
}

TEST(Counting, DtValidation) {
  EXPECT_NO_THROW(validate_counting_dt(1e-3, 10.0));
  EXPECT_THROW(validate_counting_dt(1e-2, 10.0), ValidationError);
  GeneratorOptions go;
  go.t_max = 12.0;
  const CmpGenerator gen = single_photon_generator(WavePacket::gaussian(4.0, 0.5), go);
  const TrajectoryConfig tc = config(MeasurementKind::counting, Scheme::kraus, 0.1, 12.0);
  EXPECT_THROW(run_trajectory(SLHTriple::trivial(1), gen, basis_vector(1, 0), tc, 1), ValidationError);
}

// Euler-Maruyama with a step far too large for the coupling trips the drift guard.
TEST(Trajectory, EulerMaruyamaLargeStepIsFlagged) {
  TrajectoryConfig tc = config(MeasurementKind::homodyne, Scheme::euler_maruyama, 1e-2, 1.0);
  tc.keep_states = false;
  tc.max_trace_drift = 1e-3;
  EXPECT_NO_THROW(run_trajectory(atom(0.01), vacuum_generator(), basis_vector(2, 0), tc, 2));
  tc.dt = 1e-1;
  try {
    run_trajectory(atom(20.0), vacuum_generator(), basis_vector(2, 0), tc, 2);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("before renormalization"), std::string::npos) << e.what();
    EXPECT_GT(e.time(), 0.0);
  }
}

// Innovations dY - lambda dt are white with variance dt under the filter's own law.
TEST(Trajectory, InnovationsAreWhite) {
  TrajectoryConfig tc = config(MeasurementKind::homodyne, Scheme::kraus, 1e-3, 20.0);
  tc.keep_states = false;
  tc.samples = 1;
  const TrajectoryResult r = run_trajectory(atom(1.0), vacuum_generator(), basis_vector(2, 0), tc, 77);
  double m = 0.0, v = 0.0, lag = 0.0;
  const std::size_t n = r.record.steps;
  std::vector<double> z(n);
  for (std::size_t k = 0; k < n; ++k) z[k] = (r.record.increments[k] - r.rates[k] * tc.dt) / std::sqrt(tc.dt);
  for (std::size_t k = 0; k < n; ++k) {
    m += z[k];
    v += z[k] * z[k];
    if (k > 0) lag += z[k] * z[k - 1];
  }
  const double se = 1.0 / std::sqrt(static_cast<double>(n));
  EXPECT_NEAR(m / n, 0.0, 5.0 * se);
  EXPECT_NEAR(v / n, 1.0, 5.0 * std::sqrt(2.0) * se);
  EXPECT_NEAR(lag / n, 0.0, 5.0 * se);
}

TEST(Record, Validation) {
  MeasurementRecord rec;
  rec.kind = MeasurementKind::homodyne;
  rec.dt = 0.1;
  rec.steps = 3;
  rec.increments = {0.0, 0.1};
  EXPECT_THROW(rec.validate(), ValidationError);
  rec.increments.push_back(0.2);
  EXPECT_NO_THROW(rec.validate());
  rec.kind = MeasurementKind::counting;
  rec.increments.clear();
  rec.jump_times = {0.2, 0.1};
  EXPECT_THROW(rec.validate(), ValidationError);
}

}  // namespace
}  // namespace cmptraj
