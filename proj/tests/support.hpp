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

// Random operators for property tests and small reference integrators that
// do not share code with the library.

#ifndef CMPTRAJ_TESTS_SUPPORT_HPP
#define CMPTRAJ_TESTS_SUPPORT_HPP

#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Dense>

#include <cmptraj/operator.hpp>

namespace cmptraj::testing {

inline Operator random_matrix(std::mt19937_64& g, Index n) {
  std::normal_distribution<double> nd;
  Operator m(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) m(i, j) = cplx(nd(g), nd(g));
  return m;
}

inline Operator random_hermitian(std::mt19937_64& g, Index n) {
  const Operator m = random_matrix(g, n);
  return 0.5 * (m + m.adjoint());
}

inline Operator random_unitary(std::mt19937_64& g, Index n) {
  const Eigen::HouseholderQR<Operator> qr(random_matrix(g, n));
  return qr.householderQ() * Operator::Identity(n, n);
}

inline StateVector random_state(std::mt19937_64& g, Index n) {
  std::normal_distribution<double> nd;
  StateVector v(n);
  for (Index i = 0; i < n; ++i) v(i) = cplx(nd(g), nd(g));
  return v / v.norm();
}

inline Operator random_density(std::mt19937_64& g, Index n) {
  const Operator m = random_matrix(g, n);
  const Operator r = m * m.adjoint();
  return r / r.trace().real();
}

inline double max_abs(const Operator& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace cmptraj::testing

#endif  // CMPTRAJ_TESTS_SUPPORT_HPP
