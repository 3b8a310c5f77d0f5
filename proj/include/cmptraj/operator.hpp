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

// Dense operator algebra on a system (x) auxiliary tensor product space.
//
// Operators are plain Eigen complex matrices. Every joint-space operator
// uses the factor order "system first, auxiliary second", so the joint basis
// index of (i_sys, i_aux) is i_sys * dim_aux + i_aux.

#ifndef CMPTRAJ_OPERATOR_HPP
#define CMPTRAJ_OPERATOR_HPP

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "errors.hpp"

namespace cmptraj {

using cplx = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr double kDefaultTol = 1e-10;
inline constexpr cplx kI{0.0, 1.0};

struct SpaceLayout {
  Index dim_sys = 1;
  Index dim_aux = 1;

  SpaceLayout() = default;
  SpaceLayout(Index sys, Index aux) : dim_sys(sys), dim_aux(aux) {
    if (sys < 1 || aux < 1) throw DimensionError("SpaceLayout: dimensions must be positive");
  }

  Index joint() const noexcept { return dim_sys * dim_aux; }
  Index index(Index i_sys, Index i_aux) const noexcept { return i_sys * dim_aux + i_aux; }
  bool operator==(const SpaceLayout&) const = default;
};

namespace detail {

inline void require_square(const Operator& a, const char* where) {
  if (a.rows() != a.cols()) throw DimensionError(std::string(where) + ": operator is not square");
}

inline void require_same_dim(const Operator& a, const Operator& b, const char* where) {
  require_square(a, where);
  require_square(b, where);
  if (a.rows() != b.rows()) {
    throw DimensionError(std::string(where) + ": dimension mismatch (" + std::to_string(a.rows()) +
                         " vs " + std::to_string(b.rows()) + ")");
  }
}

inline void require_joint(const Operator& joint, const SpaceLayout& layout, const char* where) {
  require_square(joint, where);
  if (joint.rows() != layout.joint()) {
    throw DimensionError(std::string(where) + ": operator dimension " + std::to_string(joint.rows()) +
                         " does not match layout " + std::to_string(layout.dim_sys) + "x" +
                         std::to_string(layout.dim_aux));
  }
}

}  // namespace detail

inline Operator identity(Index n) { return Operator::Identity(n, n); }

// |e_i><e_j| on an n-dimensional space.
inline Operator unit_matrix(Index n, Index i, Index j) {
  Operator e = Operator::Zero(n, n);
  e(i, j) = 1.0;
  return e;
}

inline StateVector basis_vector(Index n, Index i) {
  if (i < 0 || i >= n) throw DimensionError("basis_vector: index out of range");
  StateVector v = StateVector::Zero(n);
  v(i) = 1.0;
  return v;
}

// Lowering operator on C^2 with |up> = e_0 and |down> = e_1.
inline Operator sigma_minus() { return unit_matrix(2, 1, 0); }
inline Operator sigma_plus() { return unit_matrix(2, 0, 1); }

inline Operator projector(const StateVector& v) { return v * v.adjoint(); }

// Each entry is the single product a(i,j) * b(k,l); no accumulation is involved.
inline Operator kron(const Operator& a, const Operator& b) {
  const Index ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
  Operator out(ar * br, ac * bc);
  for (Index i = 0; i < ar; ++i)
    for (Index j = 0; j < ac; ++j)
      for (Index k = 0; k < br; ++k)
        for (Index l = 0; l < bc; ++l) out(i * br + k, j * bc + l) = a(i, j) * b(k, l);
  return out;
}

inline StateVector kron(const StateVector& u, const StateVector& v) {
  StateVector out(u.size() * v.size());
  for (Index i = 0; i < u.size(); ++i)
    for (Index k = 0; k < v.size(); ++k) out(i * v.size() + k) = u(i) * v(k);
  return out;
}

inline Operator adjoint(const Operator& a) { return a.adjoint(); }

inline Operator commutator(const Operator& a, const Operator& b) {
  detail::require_same_dim(a, b, "commutator");
  return a * b - b * a;
}

inline Operator anticommutator(const Operator& a, const Operator& b) {
  detail::require_same_dim(a, b, "anticommutator");
  return a * b + b * a;
}

// tr(a b) without forming the product.
inline cplx trace_product(const Operator& a, const Operator& b) {
  detail::require_same_dim(a, b, "trace_product");
  return (a.array() * b.transpose().array()).sum();
}

inline Operator partial_trace_aux(const Operator& joint, const SpaceLayout& layout) {
  detail::require_joint(joint, layout, "partial_trace_aux");
  const Index ds = layout.dim_sys, da = layout.dim_aux;
  Operator out = Operator::Zero(ds, ds);
  for (Index i = 0; i < ds; ++i)
    for (Index j = 0; j < ds; ++j) {
      cplx acc = 0.0;
      for (Index a = 0; a < da; ++a) acc += joint(layout.index(i, a), layout.index(j, a));
      out(i, j) = acc;
    }
  return out;
}

inline Operator partial_trace_sys(const Operator& joint, const SpaceLayout& layout) {
  detail::require_joint(joint, layout, "partial_trace_sys");
  const Index ds = layout.dim_sys, da = layout.dim_aux;
  Operator out = Operator::Zero(da, da);
  for (Index a = 0; a < da; ++a)
    for (Index b = 0; b < da; ++b) {
      cplx acc = 0.0;
      for (Index i = 0; i < ds; ++i) acc += joint(layout.index(i, a), layout.index(i, b));
      out(a, b) = acc;
    }
  return out;
}

// D x D grid of system-space blocks. block(a, b) collects the joint entries
// whose auxiliary row index is a and auxiliary column index is b, so that
// X (x) |e_m><e_n| lands in block(m, n).
class BlockGrid {
 public:
  BlockGrid(Index dim_aux, Index dim_sys)
      : dim_aux_(dim_aux), blocks_(static_cast<size_t>(dim_aux * dim_aux), Operator::Zero(dim_sys, dim_sys)) {}

  Index dim_aux() const noexcept { return dim_aux_; }
  Index dim_sys() const noexcept { return blocks_.front().rows(); }

  Operator& operator()(Index a, Index b) { return blocks_[static_cast<size_t>(a * dim_aux_ + b)]; }
  const Operator& operator()(Index a, Index b) const { return blocks_[static_cast<size_t>(a * dim_aux_ + b)]; }

  // D x D matrix of scalars tr(block(a, b) X).
  Operator contract(const Operator& x) const {
    Operator out(dim_aux_, dim_aux_);
    for (Index a = 0; a < dim_aux_; ++a)
      for (Index b = 0; b < dim_aux_; ++b) out(a, b) = trace_product((*this)(a, b), x);
    return out;
  }

 private:
  Index dim_aux_;
  std::vector<Operator> blocks_;
};

inline BlockGrid matrix_entries(const Operator& joint, const SpaceLayout& layout) {
  detail::require_joint(joint, layout, "matrix_entries");
  BlockGrid grid(layout.dim_aux, layout.dim_sys);
  for (Index a = 0; a < layout.dim_aux; ++a)
    for (Index b = 0; b < layout.dim_aux; ++b) {
      Operator& blk = grid(a, b);
      for (Index i = 0; i < layout.dim_sys; ++i)
        for (Index j = 0; j < layout.dim_sys; ++j) blk(i, j) = joint(layout.index(i, a), layout.index(j, b));
    }
  return grid;
}

inline Operator assemble_entries(const BlockGrid& grid) {
  const SpaceLayout layout(grid.dim_sys(), grid.dim_aux());
  Operator joint(layout.joint(), layout.joint());
  for (Index a = 0; a < layout.dim_aux; ++a)
    for (Index b = 0; b < layout.dim_aux; ++b) {
      const Operator& blk = grid(a, b);
      for (Index i = 0; i < layout.dim_sys; ++i)
        for (Index j = 0; j < layout.dim_sys; ++j) joint(layout.index(i, a), layout.index(j, b)) = blk(i, j);
    }
  return joint;
}

inline bool is_hermitian(const Operator& a, double tol = kDefaultTol) {
  return a.rows() == a.cols() && (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

inline bool is_unitary(const Operator& a, double tol = kDefaultTol) {
  if (a.rows() != a.cols()) return false;
  return (a.adjoint() * a - identity(a.rows())).cwiseAbs().maxCoeff() <= tol;
}

// Smallest eigenvalue of the Hermitian part of a.
inline double min_eigenvalue(const Operator& a) {
  detail::require_square(a, "min_eigenvalue");
  const Operator herm = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<Operator> solver(herm, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

inline bool is_positive_semidefinite(const Operator& a, double tol = kDefaultTol) {
  return is_hermitian(a, tol) && min_eigenvalue(a) >= -tol;
}

inline double purity(const Operator& rho) { return trace_product(rho, rho).real(); }

}  // namespace cmptraj

#endif  // CMPTRAJ_OPERATOR_HPP
