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
#include <random>

#include <gtest/gtest.h>

#include <cmptraj/master.hpp>

#include "support.hpp"

namespace cmptraj {
namespace {

using testing::max_abs;

SLHTriple atom(double kappa) {
  return SLHTriple::constant(identity(2), std::sqrt(kappa) * sigma_minus(), Operator::Zero(2, 2));
}

MasterOptions opts(double t_max, double dt, std::size_t samples = 0) {
  MasterOptions mo;
  mo.dt = dt;
  mo.steps = steps_for(t_max, dt);
  mo.samples = samples;
  return mo;
}

TEST(Master, InitJointIsProductState) {
  const CmpGenerator gen = custom_generator(sigma_minus(), Operator::Zero(2, 2), basis_vector(2, 0));
  const JointState s = init_joint(basis_vector(2, 1), gen);
  EXPECT_EQ(s.layout, SpaceLayout(2, 2));
  EXPECT_EQ(s.rho, kron(projector(basis_vector(2, 1)), projector(basis_vector(2, 0))));
  EXPECT_THROW(init_joint(StateVector::Ones(2), gen), ValidationError);
}

TEST(Master, VacuumDecayIsExponential) {
  const double kappa = 1.3;
  const MasterResult r = propagate(atom(kappa), vacuum_generator(), basis_vector(2, 0), opts(5.0, 1e-3, 50),
                                   {{"pe", sigma_plus() * sigma_minus()}});
  ASSERT_EQ(r.times.size(), 51u);
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    EXPECT_NEAR(r.values[0][i], std::exp(-kappa * r.times[i]), 1e-11);
    EXPECT_LE(r.trace_drift[i], 1e-12);
    EXPECT_GE(r.min_eigenvalue[i], -1e-12);
  }
  EXPECT_NEAR(r.integrated_counting_rate, 1.0 - std::exp(-kappa * 5.0), 1e-6);
}

TEST(Master, VacuumCoherenceDecaysAtHalfRate) {
  const double kappa = 0.8;
  StateVector plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const MasterResult r =
      propagate(atom(kappa), vacuum_generator(), plus, opts(4.0, 1e-3, 40), {{"sx", sigma_plus() + sigma_minus()}});
  for (std::size_t i = 0; i < r.times.size(); ++i) EXPECT_NEAR(r.values[0][i], std::exp(-0.5 * kappa * r.times[i]), 1e-11);
}

// Exponential packet sqrt(g) e^{-g t/2} into an atom of rate k starting in the ground state:
// P_e(t) = 4 k g (e^{-g t/2} - e^{-k t/2})^2 / (k - g)^2.
TEST(Master, SinglePhotonExponentialPacketClosedForm) {
  const double kappa = 1.0, gamma = 0.4;
  GeneratorOptions go;
  go.t_max = 80.0;
  go.intervals = 20000;
  const CmpGenerator gen = single_photon_generator(WavePacket::decaying_exponential(gamma), go);
  const MasterResult r =
      propagate(atom(kappa), gen, basis_vector(2, 1), opts(20.0, 1e-3, 100), {{"pe", sigma_plus() * sigma_minus()}});
  double worst = 0.0;
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    const double t = r.times[i];
    const double d = std::exp(-0.5 * gamma * t) - std::exp(-0.5 * kappa * t);
    worst = std::max(worst, std::abs(r.values[0][i] - 4.0 * kappa * gamma * d * d / ((kappa - gamma) * (kappa - gamma))));
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Master, AuxPopulationsSumToOne) {
  GeneratorOptions go;
  go.t_max = 14.0;
  const CmpGenerator gen = n_photon_generator(std::vector<WavePacket>(3, WavePacket::gaussian(5.0, 1.0)), go);
  const MasterResult r = propagate(atom(1.0), gen, basis_vector(2, 1), opts(14.0, 2e-3, 70), {});
  for (const auto& p : r.aux_populations) {
    double s = 0.0;
    for (double x : p) {
      s += x;
      EXPECT_GE(x, -1e-12);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

// With a trivial system every stored photon leaves: the integrated intensity is n.
TEST(Master, IntegratedIntensityCountsPhotons) {
  GeneratorOptions go;
  go.t_max = 16.0;
  for (std::size_t n = 1; n <= 3; ++n) {
    const CmpGenerator gen = n_photon_generator(std::vector<WavePacket>(n, WavePacket::gaussian(6.0, 1.0)), go);
    const MasterResult r = propagate(SLHTriple::trivial(1), gen, basis_vector(1, 0), opts(16.0, 1e-3, 10), {});
    EXPECT_NEAR(r.integrated_counting_rate, static_cast<double>(n), 1e-6);
  }
}

// Upsilon of the joint generator applied to rho equals the assembled matrix equation (two routes).
TEST(Master, MatrixMasterEquationMatchesJointGenerator) {
  std::mt19937_64 g(21);
  for (int trial = 0; trial < 40; ++trial) {
    const Index ds = 1 + trial % 3, d = 1 + (trial / 3) % 4;
    const SlhValues sys{testing::random_unitary(g, ds), testing::random_matrix(g, ds), testing::random_hermitian(g, ds)};
    const Operator r = testing::random_matrix(g, d), h = testing::random_hermitian(g, d);
    const SpaceLayout layout(ds, d);
    const JointState s{layout, testing::random_density(g, layout.joint()), 0.0};
    const Operator x = testing::random_matrix(g, ds);
    const SlhValues joint = cascade_values(sys, SlhValues{identity(d), r, h});
    const JointState ds_state{layout, lindblad_dual(joint, s.rho), 0.0};
    const Operator route_joint = upsilon_matrix(ds_state, x);
    const Operator route_matrix = matrix_master_rhs(s, sys, r, h, x);
    EXPECT_LT(max_abs(route_joint - route_matrix), 1e-10) << "ds=" << ds << " d=" << d;
  }
}

TEST(Master, ExpectationIsTraceOfUpsilon) {
  std::mt19937_64 g(22);
  const SpaceLayout layout(3, 2);
  const JointState s{layout, testing::random_density(g, 6), 0.0};
  const Operator x = testing::random_hermitian(g, 3);
  EXPECT_NEAR(std::abs(cmp_expectation(s, x) - upsilon_matrix(s, x).trace()), 0.0, 1e-13);
}

TEST(Master, StepPreservesTraceAndPositivity) {
  std::mt19937_64 g(23);
  const SLHTriple sys = SLHTriple::constant(testing::random_unitary(g, 2), testing::random_matrix(g, 2),
                                            testing::random_hermitian(g, 2));
  const CmpGenerator gen = custom_generator(testing::random_matrix(g, 3), testing::random_hermitian(g, 3),
                                            testing::random_state(g, 3));
  JointState s = init_joint(testing::random_state(g, 2), gen);
  const SLHTriple c = cascade_with(sys, gen);
  for (int k = 0; k < 500; ++k) {
    s = master_step(s, c, 1e-3);
    const InvariantReport rep = check_invariants(s);
    ASSERT_LE(rep.trace_drift, 1e-12);
    ASSERT_LE(rep.hermiticity, 1e-12);
    ASSERT_GE(rep.min_eigenvalue, -1e-10);
  }
  EXPECT_NEAR(s.t, 0.5, 1e-12);
}

// RK4 far outside its stability region drives populations negative; propagation stops with the time.
TEST(Master, PositivityViolationReportsTime) {
  try {
    propagate(atom(100.0), vacuum_generator(), basis_vector(2, 0), opts(1.0, 0.1), {});
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_GT(e.time(), 0.0);
    EXPECT_LE(e.time(), 0.2 + 1e-12);
  }
}

TEST(Master, SampleScheduleProperties) {
  EXPECT_EQ(sample_schedule(10, 0).size(), 11u);
  EXPECT_EQ(sample_schedule(10, 20).size(), 11u);
  for (std::size_t steps : {7u, 100u, 12000u, 9999u})
    for (std::size_t samples : {1u, 3u, 200u}) {
      const auto s = sample_schedule(steps, samples);
      EXPECT_EQ(s.front(), 0u);
      EXPECT_EQ(s.back(), steps);
      for (std::size_t i = 1; i < s.size(); ++i) EXPECT_GT(s[i], s[i - 1]);
      if (samples < steps) {
        EXPECT_EQ(s.size(), samples + 1);
      }
    }
}

TEST(Master, StepsForValidatesDivisibility) {
  EXPECT_EQ(steps_for(12.0, 1e-3), 12000u);
  EXPECT_EQ(steps_for(1.0, 0.1), 10u);
  EXPECT_THROW(steps_for(1.0, 0.3), ValidationError);
  EXPECT_THROW(steps_for(1.0, 0.0), ValidationError);
  EXPECT_THROW(steps_for(-1.0, 0.1), ValidationError);
}

TEST(Master, ObservableDimensionChecked) {
  EXPECT_THROW(propagate(atom(1.0), vacuum_generator(), basis_vector(2, 0), opts(1.0, 0.1), {{"bad", identity(3)}}),
               DimensionError);
}

}  // namespace
}  // namespace cmptraj
