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

// Photon wave packets, the survival weights w_k and emission rates lambda_k of
// a decaying ladder source, and the source models (auxiliary dimension D,
// coupling R(t), Hamiltonian H_aux(t), initial vector phi) that generate
// single-photon and time-ordered n-photon input fields.
//
// Auxiliary basis convention for an n-photon source: component 0 is the fully
// excited level |n>, component n is the ground level |0>. For n = 1 this is
// |up> = e_0, |down> = e_1, and R is proportional to sigma_minus().

#ifndef CMPTRAJ_WAVEPACKET_HPP
#define CMPTRAJ_WAVEPACKET_HPP

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "operator.hpp"
#include "quadrature.hpp"
#include "slh.hpp"

namespace cmptraj {

class WavePacket {
 public:
  struct DecayingExponential {
    double gamma;
  };
  struct Gaussian {
    double t0;
    double sigma;
  };
  struct Square {
    double t0;
    double t1;
  };
  struct Tabulated {
    std::vector<double> times;
    std::vector<cplx> values;
  };
  using Shape = std::variant<DecayingExponential, Gaussian, Square, Tabulated>;

  // xi(t) = sqrt(gamma) exp(-gamma t / 2)
  static WavePacket decaying_exponential(double gamma) {
    if (!(gamma > 0.0)) throw ValidationError("decaying_exponential: gamma must be positive");
    return WavePacket(DecayingExponential{gamma}, std::sqrt(gamma));
  }

  // |xi(t)|^2 is a normal density of mean t0 and width sigma, restricted to [0, inf) and renormalized.
  static WavePacket gaussian(double t0, double sigma) {
    if (!(sigma > 0.0)) throw ValidationError("gaussian: sigma must be positive");
    const double kept = 0.5 * std::erfc(-t0 / (sigma * std::numbers::sqrt2));
    if (!(kept > 0.0)) throw ValidationError("gaussian: no mass on [0, inf)");
    const double amp2 = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi) * kept);
    return WavePacket(Gaussian{t0, sigma}, std::sqrt(amp2));
  }

  static WavePacket square(double t0, double t1) {
    if (!(t0 >= 0.0) || !(t1 > t0)) throw ValidationError("square: need 0 <= t0 < t1");
    return WavePacket(Square{t0, t1}, 1.0 / std::sqrt(t1 - t0));
  }

  // Piecewise-linear in (Re, Im) between samples, zero outside. Rescaled to
  // unit norm unless normalize is false.
  static WavePacket tabulated(std::vector<double> times, std::vector<cplx> values, bool normalize = true) {
    if (times.size() < 2 || times.size() != values.size()) {
      throw ValidationError("tabulated: need at least two (time, value) samples");
    }
    if (times.front() < 0.0) throw ValidationError("tabulated: times must be non-negative");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1])) throw ValidationError("tabulated: times must be strictly increasing");
    WavePacket p(Tabulated{std::move(times), std::move(values)}, 1.0);
    if (normalize) {
      const double n2 = p.norm_squared();
      if (!(n2 > 0.0)) throw ValidationError("tabulated: packet is identically zero");
      p.amplitude_ = 1.0 / std::sqrt(n2);
    }
    return p;
  }

  cplx operator()(double t) const {
    return std::visit([&](const auto& s) { return amplitude_ * raw(s, t); }, shape_);
  }

  double intensity(double t) const { return std::norm((*this)(t)); }

  // Integral of |xi|^2 over [t, inf), exact for every shape.
  double tail_mass(double t) const {
    return amplitude_ * amplitude_ * std::visit([&](const auto& s) { return raw_tail(s, t); }, shape_);
  }

  double norm_squared() const { return tail_mass(0.0); }

  // Points where xi is not smooth.
  std::vector<double> breakpoints() const {
    if (const auto* sq = std::get_if<Square>(&shape_)) return {sq->t0, sq->t1};
    if (const auto* tab = std::get_if<Tabulated>(&shape_)) return tab->times;
    return {};
  }

  const Shape& shape() const noexcept { return shape_; }

  bool operator==(const WavePacket& other) const {
    return amplitude_ == other.amplitude_ && same_shape(other);
  }

 private:
  WavePacket(Shape shape, double amplitude) : shape_(std::move(shape)), amplitude_(amplitude) {}

  static cplx raw(const DecayingExponential& s, double t) { return t < 0.0 ? 0.0 : std::exp(-0.5 * s.gamma * t); }
  static cplx raw(const Gaussian& s, double t) {
    if (t < 0.0) return 0.0;
    const double z = (t - s.t0) / s.sigma;
    return std::exp(-0.25 * z * z);
  }
  static cplx raw(const Square& s, double t) { return (t >= s.t0 && t < s.t1) ? 1.0 : 0.0; }
  static cplx raw(const Tabulated& s, double t) {
    if (t < s.times.front() || t > s.times.back()) return 0.0;
    const auto it = std::upper_bound(s.times.begin(), s.times.end(), t);
    if (it == s.times.end()) return s.values.back();
    const std::size_t i = static_cast<std::size_t>(it - s.times.begin()) - 1;
    const double f = (t - s.times[i]) / (s.times[i + 1] - s.times[i]);
    return s.values[i] + f * (s.values[i + 1] - s.values[i]);
  }

  static double raw_tail(const DecayingExponential& s, double t) { return std::exp(-s.gamma * std::max(t, 0.0)) / s.gamma; }
  static double raw_tail(const Gaussian& s, double t) {
    const double z = (std::max(t, 0.0) - s.t0) / (s.sigma * std::numbers::sqrt2);
    return s.sigma * std::sqrt(2.0 * std::numbers::pi) * 0.5 * std::erfc(z);
  }
  static double raw_tail(const Square& s, double t) { return std::max(0.0, s.t1 - std::max(t, s.t0)); }
  static double raw_tail(const Tabulated& s, double t) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < s.times.size(); ++i) {
      const double a0 = s.times[i], a1 = s.times[i + 1];
      if (a1 <= t) continue;
      const double h = a1 - a0;
      const double s0 = t > a0 ? (t - a0) / h : 0.0;
      const cplx a = s.values[i], d = s.values[i + 1] - s.values[i];
      acc += h * (std::norm(a) * (1.0 - s0) + std::real(a * std::conj(d)) * (1.0 - s0 * s0) +
                  std::norm(d) * (1.0 - s0 * s0 * s0) / 3.0);
    }
    return acc;
  }

  bool same_shape(const WavePacket& other) const {
    if (shape_.index() != other.shape_.index()) return false;
    return std::visit(
        [&](const auto& s) {
          using S = std::decay_t<decltype(s)>;
          const auto& o = std::get<S>(other.shape_);
          if constexpr (std::is_same_v<S, DecayingExponential>) return s.gamma == o.gamma;
          if constexpr (std::is_same_v<S, Gaussian>) return s.t0 == o.t0 && s.sigma == o.sigma;
          if constexpr (std::is_same_v<S, Square>) return s.t0 == o.t0 && s.t1 == o.t1;
          if constexpr (std::is_same_v<S, Tabulated>) return s.times == o.times && s.values == o.values;
        },
        shape_);
  }

  Shape shape_;
  double amplitude_;
};

struct WeightOptions {
  double eps_w = 1e-8;     // survival floor below which rates are clamped
  double eps_tail = 1e-8;  // allowed packet mass beyond the grid
  double norm_tol = 1e-8;  // packet normalization and quadrature tolerance
};

// A rate sample. clamped is set when t lies past the last grid point at which
// the relevant survival weight is still above the floor.
struct Rate {
  cplx value;
  bool clamped = false;
};

// Survival weights of an n-stage decay ladder on a uniform grid:
//   w_{n+1} = 1,  w_k(t) = (int_t^inf |xi_k|^2 w_{k+1}) / c_k,  c_k = int_0^inf |xi_k|^2 w_{k+1}.
// w_n is exact (closed-form packet tails); lower stages are accumulated with
// piecewise 4-point Gauss-Legendre and interpolated by cubic Hermite using the
// exact derivative -|xi_k|^2 w_{k+1} / c_k.
class WeightTable {
 public:
  WeightTable(std::vector<WavePacket> packets, UniformGrid grid, WeightOptions opts = {})
      : packets_(std::move(packets)), grid_(grid), opts_(opts) {
    const std::size_t n = packets_.size();
    if (n == 0) throw ValidationError("compute_weights: need at least one packet");
    for (std::size_t k = 0; k < n; ++k) check_packet(k);
    for (const auto& p : packets_) {
      const auto b = p.breakpoints();
      breaks_.insert(breaks_.end(), b.begin(), b.end());
    }
    std::sort(breaks_.begin(), breaks_.end());
    breaks_.erase(std::unique(breaks_.begin(), breaks_.end()), breaks_.end());
    kinked_ = quad::kinked_intervals(grid_, breaks_);

    norm_consts_.assign(n, 1.0);
    tables_.resize(n);
    tables_[n - 1] = exact_top_table();
    for (std::size_t k = n - 1; k-- > 0;) tables_[k] = accumulate_stage(k);

    clamp_index_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const auto& vals = tables_[k].values();
      std::size_t last = 0;
      while (last + 1 < vals.size() && vals[last + 1] >= opts_.eps_w) ++last;
      clamp_index_[k] = last;
    }
  }

  std::size_t photons() const noexcept { return packets_.size(); }
  const UniformGrid& grid() const noexcept { return grid_; }
  const std::vector<WavePacket>& packets() const noexcept { return packets_; }
  const WeightOptions& options() const noexcept { return opts_; }
  // Sorted union of the packets' non-smooth points; every stage inherits them.
  const std::vector<double>& breakpoints() const noexcept { return breaks_; }

  // w_k(t) for k = 1 .. n+1.
  double w(std::size_t k, double t) const {
    check_stage(k, packets_.size() + 1);
    if (k == packets_.size() + 1) return 1.0;
    if (k == packets_.size()) return top_weight(t);
    if (t > 0.0 && t < grid_.t_max) {
      const std::size_t i = grid_.locate(t);
      if (kinked_[i]) {
        // Integrate from the right node instead of interpolating across the kink.
        const WavePacket& p = packets_[k - 1];
        const double right = grid_.time(i + 1);
        const double part = quad::piecewise_gauss([&](double s) { return p.intensity(s) * w(k + 1, s); }, t, right, breaks_);
        return tables_[k - 1].values()[i + 1] + part / norm_consts_[k - 1];
      }
    }
    return tables_[k - 1](t);
  }

  double w_node(std::size_t k, std::size_t i) const {
    check_stage(k, packets_.size() + 1);
    if (k == packets_.size() + 1) return 1.0;
    return tables_[k - 1].values().at(i);
  }

  // c_k = int_0^inf |xi_k|^2 w_{k+1}; c_n = 1.
  double norm_const(std::size_t k) const {
    check_stage(k, packets_.size());
    return norm_consts_[k - 1];
  }

  double norm_const_product() const {
    double p = 1.0;
    for (double c : norm_consts_) p *= c;
    return p;
  }

  // Time after which lambda_k is held constant.
  double clamp_time(std::size_t k) const {
    check_stage(k, packets_.size());
    return grid_.time(clamp_index_[k - 1]);
  }

  // lambda_k(t) = xi_k(t) sqrt(w_{k+1}(t)) / (sqrt(c_k) sqrt(w_k(t))).
  Rate lambda(std::size_t k, double t) const {
    check_stage(k, packets_.size());
    const double tc = clamp_time(k);
    if (t > tc) return Rate{raw_lambda(k, tc), true};
    return Rate{raw_lambda(k, t), false};
  }

 private:
  static void check_stage(std::size_t k, std::size_t max) {
    if (k < 1 || k > max) throw ValidationError("weight stage index out of range: " + std::to_string(k));
  }

  void check_packet(std::size_t k) const {
    const WavePacket& p = packets_[k];
    const std::string tag = "packet " + std::to_string(k + 1);
    const double n2 = p.norm_squared();
    if (std::abs(n2 - 1.0) > opts_.norm_tol) {
      throw ValidationError(tag + " is not normalized (norm^2 = " + std::to_string(n2) + ")");
    }
    const double tail = p.tail_mass(grid_.t_max);
    if (tail > opts_.eps_tail) {
      throw ValidationError(tag + ": grid ends before the packet support (tail mass " + std::to_string(tail) + ")");
    }
    const auto pieces = quad::interval_integrals([&](double s) { return p.intensity(s); }, grid_, p.breakpoints());
    double on_grid = 0.0;
    for (double x : pieces) on_grid += x;
    if (std::abs(on_grid - (n2 - tail)) > opts_.norm_tol) {
      throw ValidationError(tag + ": grid too coarse to resolve the packet");
    }
  }

  double top_weight(double t) const {
    const WavePacket& p = packets_.back();
    return p.tail_mass(t) / p.norm_squared();
  }

  HermiteTable exact_top_table() const {
    const WavePacket& p = packets_.back();
    std::vector<double> vals(grid_.nodes()), ders(grid_.nodes());
    for (std::size_t i = 0; i < grid_.nodes(); ++i) {
      const double t = grid_.time(i);
      vals[i] = top_weight(t);
      ders[i] = -p.intensity(t) / p.norm_squared();
    }
    return HermiteTable(grid_, std::move(vals), std::move(ders));
  }

  // Stage k (0-based) from stage k+1.
  HermiteTable accumulate_stage(std::size_t k) {
    const WavePacket& p = packets_[k];
    const auto upper = [&](double s) { return w(k + 2, s); };
    const auto pieces =
        quad::interval_integrals([&](double s) { return p.intensity(s) * upper(s); }, grid_, breaks_);
    auto tail = quad::tail_cumulative(pieces);
    const double beyond = p.tail_mass(grid_.t_max) * upper(grid_.t_max);
    for (double& x : tail) x += beyond;
    const double c = tail.front();
    if (!(c > 0.0)) throw ValidationError("compute_weights: vanishing normalization for stage " + std::to_string(k + 1));
    norm_consts_[k] = c;
    std::vector<double> ders(grid_.nodes());
    for (std::size_t i = 0; i < grid_.nodes(); ++i) {
      tail[i] /= c;
      const double t = grid_.time(i);
      ders[i] = -p.intensity(t) * upper(t) / c;
    }
    tail.front() = 1.0;
    return HermiteTable(grid_, std::move(tail), std::move(ders));
  }

  cplx raw_lambda(std::size_t k, double t) const {
    const cplx xi = packets_[k - 1](t);
    if (xi == cplx(0.0)) return 0.0;
    const double wk = w(k, t);
    const double wk1 = w(k + 1, t);
    return xi * std::sqrt(std::max(wk1, 0.0) / (norm_consts_[k - 1] * wk));
  }

  std::vector<WavePacket> packets_;
  UniformGrid grid_;
  WeightOptions opts_;
  std::vector<double> breaks_;
  std::vector<char> kinked_;
  std::vector<double> norm_consts_;
  std::vector<HermiteTable> tables_;
  std::vector<std::size_t> clamp_index_;
};

inline WeightTable compute_weights(std::vector<WavePacket> packets, UniformGrid grid, WeightOptions opts = {}) {
  return WeightTable(std::move(packets), grid, opts);
}

inline Rate lambda_k(const WeightTable& table, std::size_t k, double t) { return table.lambda(k, t); }

// Auxiliary source model (I, R(t), H_aux(t)) with initial vector phi.
class CmpGenerator {
 public:
  enum class Kind { vacuum, single_photon, n_photon, custom };
  using OperatorFn = std::function<Operator(double)>;

  CmpGenerator(Index dim, OperatorFn coupling, OperatorFn hamiltonian, StateVector phi, Kind kind,
               std::shared_ptr<const WeightTable> weights = nullptr)
      : dim_(dim),
        coupling_(std::move(coupling)),
        hamiltonian_(std::move(hamiltonian)),
        phi_(std::move(phi)),
        kind_(kind),
        weights_(std::move(weights)) {
    if (dim_ < 1) throw DimensionError("CmpGenerator: dimension must be positive");
    if (phi_.size() != dim_) throw DimensionError("CmpGenerator: phi has the wrong dimension");
    if (std::abs(phi_.norm() - 1.0) > kDefaultTol) throw ValidationError("CmpGenerator: phi must be a unit vector");
  }

  Index dim() const noexcept { return dim_; }
  Operator R(double t) const { return coupling_(t); }
  Operator H_aux(double t) const { return hamiltonian_(t); }
  const StateVector& phi() const noexcept { return phi_; }
  Kind kind() const noexcept { return kind_; }
  std::size_t photons() const noexcept { return weights_ ? weights_->photons() : 0; }
  const std::shared_ptr<const WeightTable>& weights() const noexcept { return weights_; }

  SLHTriple as_triple() const {
    const Index d = dim_;
    return SLHTriple(d, [d, r = coupling_, h = hamiltonian_](double t) {
      return SlhValues{identity(d), r(t), h(t)};
    });
  }

 private:
  Index dim_;
  OperatorFn coupling_;
  OperatorFn hamiltonian_;
  StateVector phi_;
  Kind kind_;
  std::shared_ptr<const WeightTable> weights_;
};

struct GeneratorOptions {
  double t_max = 0.0;
  std::size_t intervals = 10000;
  WeightOptions weights{};
};

inline CmpGenerator vacuum_generator() {
  return CmpGenerator(
      1, [](double) { return Operator::Zero(1, 1); }, [](double) { return Operator::Zero(1, 1); },
      basis_vector(1, 0), CmpGenerator::Kind::vacuum);
}

inline CmpGenerator custom_generator(Operator r, Operator h_aux, StateVector phi) {
  const Index d = r.rows();
  if (r.cols() != d || h_aux.rows() != d || h_aux.cols() != d) {
    throw DimensionError("custom generator: R and H_aux must be square of equal size");
  }
  if (!is_hermitian(h_aux)) throw ValidationError("custom generator: H_aux is not Hermitian");
  return CmpGenerator(
      d, [r = std::move(r)](double) { return r; }, [h = std::move(h_aux)](double) { return h; }, std::move(phi),
      CmpGenerator::Kind::custom);
}

// D = n + 1 ladder: R(t) has lambda_{i+1}(t) at (i+1, i), H_aux = 0, phi = e_0 (all n quanta stored).
inline CmpGenerator n_photon_generator(std::vector<WavePacket> packets, const GeneratorOptions& opts) {
  const std::size_t n = packets.size();
  if (n == 0) throw ValidationError("n_photon_generator: need n >= 1 packets");
  auto table = std::make_shared<const WeightTable>(std::move(packets), UniformGrid(opts.t_max, opts.intervals),
                                                   opts.weights);
  const Index d = static_cast<Index>(n) + 1;
  auto coupling = [table, d](double t) {
    Operator r = Operator::Zero(d, d);
    for (Index i = 0; i + 1 < d; ++i) r(i + 1, i) = table->lambda(static_cast<std::size_t>(i) + 1, t).value;
    return r;
  };
  return CmpGenerator(
      d, std::move(coupling), [d](double) { return Operator::Zero(d, d); }, basis_vector(d, 0),
      n == 1 ? CmpGenerator::Kind::single_photon : CmpGenerator::Kind::n_photon, std::move(table));
}

// D = 2, R(t) = xi(t) / sqrt(w(t)) sigma_minus, phi = |up>.
inline CmpGenerator single_photon_generator(WavePacket packet, const GeneratorOptions& opts) {
  return n_photon_generator({std::move(packet)}, opts);
}

}  // namespace cmptraj

#endif  // CMPTRAJ_WAVEPACKET_HPP
