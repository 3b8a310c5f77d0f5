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

#ifndef CMPTRAJ_QUADRATURE_HPP
#define CMPTRAJ_QUADRATURE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace cmptraj {

// Uniform grid 0 = t_0 < t_1 < ... < t_N = t_max.
struct UniformGrid {
  double t_max = 0.0;
  std::size_t intervals = 0;

  UniformGrid() = default;
  UniformGrid(double tmax, std::size_t n) : t_max(tmax), intervals(n) {
    if (!(tmax > 0.0) || n < 4) throw ValidationError("grid: need t_max > 0 and at least 4 intervals");
  }

  double step() const noexcept { return t_max / static_cast<double>(intervals); }
  std::size_t nodes() const noexcept { return intervals + 1; }
  double time(std::size_t i) const noexcept { return t_max * static_cast<double>(i) / static_cast<double>(intervals); }

  // Interval containing t, clamped to [0, intervals - 1].
  std::size_t locate(double t) const noexcept {
    if (!(t > 0.0)) return 0;
    const auto i = static_cast<std::size_t>(t / step());
    return std::min(i, intervals - 1);
  }
};

namespace quad {

// 4-point Gauss-Legendre on [-1, 1].
inline constexpr std::array<double, 4> kNodes{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                              0.8611363115940526};
inline constexpr std::array<double, 4> kWeights{0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                                0.3478548451374538};

inline double gauss_legendre(const std::function<double(double)>& f, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0.0;
  for (std::size_t q = 0; q < kNodes.size(); ++q) acc += kWeights[q] * f(mid + half * kNodes[q]);
  return acc * half;
}

// Integral over [a, b], split at every breakpoint strictly inside so each piece is smooth.
inline double piecewise_gauss(const std::function<double(double)>& f, double a, double b,
                              const std::vector<double>& breakpoints) {
  double acc = 0.0, lo = a;
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), a);
  for (; it != breakpoints.end() && *it < b; ++it) {
    acc += gauss_legendre(f, lo, *it);
    lo = *it;
  }
  return acc + gauss_legendre(f, lo, b);
}

// Per-interval integrals of f on the grid.
inline std::vector<double> interval_integrals(const std::function<double(double)>& f, const UniformGrid& grid,
                                              const std::vector<double>& breakpoints) {
  std::vector<double> out(grid.intervals);
  for (std::size_t i = 0; i < grid.intervals; ++i) out[i] = piecewise_gauss(f, grid.time(i), grid.time(i + 1), breakpoints);
  return out;
}

// out[i] = integral of f over [t_i, t_N].
inline std::vector<double> tail_cumulative(const std::vector<double>& pieces) {
  std::vector<double> out(pieces.size() + 1, 0.0);
  for (std::size_t i = pieces.size(); i-- > 0;) out[i] = out[i + 1] + pieces[i];
  return out;
}

// out[i] = integral of f over [t_0, t_i].
inline std::vector<double> head_cumulative(const std::vector<double>& pieces) {
  std::vector<double> out(pieces.size() + 1, 0.0);
  for (std::size_t i = 0; i < pieces.size(); ++i) out[i + 1] = out[i] + pieces[i];
  return out;
}

// flags[i] is set when a breakpoint lies strictly inside interval i; a cubic
// between the nodes of such an interval cannot follow the kink.
inline std::vector<char> kinked_intervals(const UniformGrid& grid, const std::vector<double>& breakpoints) {
  std::vector<char> flags(grid.intervals, 0);
  for (double b : breakpoints) {
    if (!(b > 0.0) || !(b < grid.t_max)) continue;
    const std::size_t i = grid.locate(b);
    if (b > grid.time(i) && b < grid.time(i + 1)) flags[i] = 1;
  }
  return flags;
}

}  // namespace quad

// Nodal values plus nodal derivatives on a uniform grid, evaluated between
// nodes by cubic Hermite interpolation. Constant beyond the grid ends.
class HermiteTable {
 public:
  HermiteTable() = default;
  HermiteTable(UniformGrid grid, std::vector<double> values, std::vector<double> derivs)
      : grid_(grid), values_(std::move(values)), derivs_(std::move(derivs)) {
    if (values_.size() != grid_.nodes() || derivs_.size() != grid_.nodes()) {
      throw DimensionError("HermiteTable: node count mismatch");
    }
  }

  double operator()(double t) const {
    if (t <= 0.0) return values_.front();
    if (t >= grid_.t_max) return values_.back();
    const std::size_t i = grid_.locate(t);
    const double h = grid_.step();
    const double s = (t - grid_.time(i)) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    return h00 * values_[i] + h10 * h * derivs_[i] + h01 * values_[i + 1] + h11 * h * derivs_[i + 1];
  }

  const std::vector<double>& values() const noexcept { return values_; }
  const UniformGrid& grid() const noexcept { return grid_; }

 private:
  UniformGrid grid_;
  std::vector<double> values_;
  std::vector<double> derivs_;
};

}  // namespace cmptraj

#endif  // CMPTRAJ_QUADRATURE_HPP
