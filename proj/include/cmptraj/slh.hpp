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

// (S, L, H) parameters of a single-input single-output open system, the four
// Evans-Hudson generator maps, the Schrodinger-picture Lindblad generator and
// the series product that feeds an auxiliary source into a system.

#ifndef CMPTRAJ_SLH_HPP
#define CMPTRAJ_SLH_HPP

#include <functional>
#include <string>
#include <utility>

#include "operator.hpp"

namespace cmptraj {

// Scattering, coupling and Hamiltonian sampled at one instant.
struct SlhValues {
  Operator S;
  Operator L;
  Operator H;

  Index dim() const noexcept { return S.rows(); }
};

inline void validate_slh(const SlhValues& v, double tol = kDefaultTol) {
  const Index n = v.S.rows();
  if (v.S.cols() != n || v.L.rows() != n || v.L.cols() != n || v.H.rows() != n || v.H.cols() != n) {
    throw DimensionError("SLH triple: S, L and H must share one square dimension");
  }
  if (!is_unitary(v.S, tol)) throw ValidationError("SLH triple: S is not unitary");
  if (!is_hermitian(v.H, tol)) throw ValidationError("SLH triple: H is not Hermitian");
}

// Possibly time-dependent triple, represented by its evaluation map t -> (S, L, H).
// The map must be pure; ensemble workers call it concurrently.
class SLHTriple {
 public:
  using EvalFn = std::function<SlhValues(double)>;

  SLHTriple(Index dim, EvalFn eval) : dim_(dim), eval_(std::move(eval)) {
    if (dim < 1) throw DimensionError("SLH triple: dimension must be positive");
  }

  static SLHTriple constant(Operator S, Operator L, Operator H) {
    SlhValues v{std::move(S), std::move(L), std::move(H)};
    validate_slh(v);
    const Index n = v.dim();
    return SLHTriple(n, [v = std::move(v)](double) { return v; });
  }

  // The empty system: S = I, L = 0, H = 0 on C^dim.
  static SLHTriple trivial(Index dim = 1) {
    return constant(identity(dim), Operator::Zero(dim, dim), Operator::Zero(dim, dim));
  }

  Index dim() const noexcept { return dim_; }

  SlhValues at(double t) const {
    SlhValues v = eval_(t);
    if (v.dim() != dim_ || v.L.rows() != dim_ || v.H.rows() != dim_) {
      throw DimensionError("SLH triple: evaluation returned the wrong dimension");
    }
    return v;
  }

  void validate_at(double t, double tol = kDefaultTol) const { validate_slh(at(t), tol); }

 private:
  Index dim_;
  EvalFn eval_;
};

enum class EvansHudson { k00, k01, k10, k11 };

// Heisenberg-picture maps:
//   L00 X = 1/2 [L*, X] L + 1/2 L* [X, L] - i [X, H]
//   L10 X = S* [X, L],  L01 X = [L*, X] S,  L11 X = S* X S - X
inline Operator evans_hudson(const SlhValues& v, EvansHudson which, const Operator& x) {
  detail::require_same_dim(v.S, x, "evans_hudson");
  const Operator ld = v.L.adjoint();
  switch (which) {
    case EvansHudson::k00:
      return 0.5 * (ld * x - x * ld) * v.L + 0.5 * ld * (x * v.L - v.L * x) - kI * (x * v.H - v.H * x);
    case EvansHudson::k10:
      return v.S.adjoint() * (x * v.L - v.L * x);
    case EvansHudson::k01:
      return (ld * x - x * ld) * v.S;
    case EvansHudson::k11:
      return v.S.adjoint() * x * v.S - x;
  }
  throw std::logic_error("evans_hudson: unknown map");
}

inline Operator evans_hudson(const SLHTriple& triple, EvansHudson which, const Operator& x, double t) {
  return evans_hudson(triple.at(t), which, x);
}

// Schrodinger-picture generator L rho L* - 1/2 {rho, L*L} + i [rho, H].
inline Operator lindblad_dual(const SlhValues& v, const Operator& rho) {
  detail::require_same_dim(v.L, rho, "lindblad_dual");
  const Operator ld = v.L.adjoint();
  const Operator ldl = ld * v.L;
  return v.L * rho * ld - 0.5 * (rho * ldl + ldl * rho) + kI * (rho * v.H - v.H * rho);
}

inline Operator lindblad_dual(const SLHTriple& triple, const Operator& rho, double t) {
  return lindblad_dual(triple.at(t), rho);
}

// Series product of an identity-scattering source (I, R, H_aux) fed into (S, L, H):
//   S~ = S (x) I,  L~ = L (x) I + S (x) R,
//   H~ = H (x) I + I (x) H_aux + (1/2i)(L*S (x) R - S*L (x) R*).
inline SlhValues cascade_values(const SlhValues& sys, const SlhValues& aux) {
  const Index ds = sys.dim(), da = aux.dim();
  const Operator ia = identity(da), is = identity(ds);
  const Operator cross = kron(sys.L.adjoint() * sys.S, aux.L);
  SlhValues out;
  out.S = kron(sys.S, ia);
  out.L = kron(sys.L, ia) + kron(sys.S, aux.L);
  out.H = kron(sys.H, ia) + kron(is, aux.H) + (cross - cross.adjoint()) / (2.0 * kI);
  return out;
}

inline SLHTriple cascade(const SLHTriple& sys, const SLHTriple& aux, const SpaceLayout& layout,
                         double tol = kDefaultTol) {
  if (sys.dim() != layout.dim_sys || aux.dim() != layout.dim_aux) {
    throw DimensionError("cascade: triple dimensions do not match the layout");
  }
  if ((aux.at(0.0).S - identity(aux.dim())).cwiseAbs().maxCoeff() > tol) {
    throw ValidationError("cascade: the source triple must have identity scattering");
  }
  return SLHTriple(layout.joint(), [sys, aux](double t) { return cascade_values(sys.at(t), aux.at(t)); });
}

// Norm of  L~00(X (x) A) - [L00 X (x) A + L01 X (x) A R + L10 X (x) R* A + L11 X (x) R* A R + X (x) L00aux A],
// with L~00 built from the cascade. Vanishes identically.
inline double lindblad_identity_residual(const SlhValues& sys, const SlhValues& aux, const Operator& x,
                                         const Operator& a) {
  detail::require_same_dim(sys.S, x, "lindblad_identity_residual");
  detail::require_same_dim(aux.S, a, "lindblad_identity_residual");
  const Operator& r = aux.L;
  const Operator rd = r.adjoint();
  const Operator lhs = evans_hudson(cascade_values(sys, aux), EvansHudson::k00, kron(x, a));
  const Operator rhs = kron(evans_hudson(sys, EvansHudson::k00, x), a) +
                       kron(evans_hudson(sys, EvansHudson::k01, x), a * r) +
                       kron(evans_hudson(sys, EvansHudson::k10, x), rd * a) +
                       kron(evans_hudson(sys, EvansHudson::k11, x), rd * a * r) +
                       kron(x, evans_hudson(aux, EvansHudson::k00, a));
  return (lhs - rhs).norm();
}

inline double lindblad_identity_residual(const SLHTriple& sys, const SLHTriple& aux, const Operator& x,
                                         const Operator& a, double t) {
  return lindblad_identity_residual(sys.at(t), aux.at(t), x, a);
}

}  // namespace cmptraj

#endif  // CMPTRAJ_SLH_HPP
