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

// Closed-form level populations of the photon-source ladder and the norm
// identities of the time-ordered n-photon field.
//
// After j emissions at s_1 < ... < s_j the ladder sits in level n - j with
// probability density prod |xi_k(s_k)|^2 / prod c_k times the survival w_{j+1}(t),
// so
//   p_{n-j}(t) = w_{j+1}(t) I_j(t) / (c_1 ... c_j),
//   I_0 = 1,  I_j(t) = int_0^t |xi_j(s)|^2 I_{j-1}(s) ds.
// The I_j are accumulated from the bottom of the ladder upward, the opposite
// nesting to the survival weights, so sum_k p_k = 1 is a genuine check.

#ifndef CMPTRAJ_ORACLE_HPP
#define CMPTRAJ_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "master.hpp"
#include "quadrature.hpp"
#include "wavepacket.hpp"

namespace cmptraj {

class GeneratorClosedForm {
 public:
  GeneratorClosedForm(std::vector<WavePacket> packets, UniformGrid grid, WeightOptions opts = {})
      : weights_(std::make_shared<const WeightTable>(std::move(packets), grid, opts)) {
    build_iterated();
  }

  explicit GeneratorClosedForm(std::shared_ptr<const WeightTable> weights) : weights_(std::move(weights)) {
    if (!weights_) throw ValidationError("GeneratorClosedForm: null weight table");
    build_iterated();
  }

  std::size_t photons() const noexcept { return weights_->photons(); }
  const WeightTable& weights() const noexcept { return *weights_; }

  // I_j(t), j = 0 .. n.
  double iterated(std::size_t j, double t) const {
    if (j == 0) return 1.0;
    const HermiteTable& table = iterated_.at(j - 1);
    const UniformGrid& grid = weights_->grid();
    if (t > 0.0 && t < grid.t_max) {
      const std::size_t i = grid.locate(t);
      if (kinked_[i]) {
        const WavePacket& xi = weights_->packets()[j - 1];
        const double part = quad::piecewise_gauss([&](double s) { return xi.intensity(s) * iterated(j - 1, s); },
                                                  grid.time(i), t, weights_->breakpoints());
        return table.values()[i] + part;
      }
    }
    return table(t);
  }

  // (p_n, p_{n-1}, ..., p_0) at t.
  std::vector<double> populations(double t) const {
    const std::size_t n = photons();
    std::vector<double> p(n + 1);
    double cprod = 1.0;
    for (std::size_t j = 0; j <= n; ++j) {
      if (j > 0) cprod *= weights_->norm_const(j);
      p[j] = weights_->w(j + 1, t) * iterated(j, t) / cprod;
    }
    return p;
  }

 private:
  void build_iterated() {
    const std::size_t n = photons();
    const UniformGrid& grid = weights_->grid();
    kinked_ = quad::kinked_intervals(grid, weights_->breakpoints());
    iterated_.clear();
    iterated_.reserve(n);
    for (std::size_t j = 1; j <= n; ++j) {
      const WavePacket& xi = weights_->packets()[j - 1];
      const auto lower = [&](double s) { return iterated(j - 1, s); };
      const auto pieces =
          quad::interval_integrals([&](double s) { return xi.intensity(s) * lower(s); }, grid, weights_->breakpoints());
      std::vector<double> vals = quad::head_cumulative(pieces);
      std::vector<double> ders(grid.nodes());
      for (std::size_t i = 0; i < grid.nodes(); ++i) {
        const double t = grid.time(i);
        ders[i] = xi.intensity(t) * lower(t);
      }
      iterated_.emplace_back(grid, std::move(vals), std::move(ders));
    }
  }

  std::shared_ptr<const WeightTable> weights_;
  std::vector<HermiteTable> iterated_;
  std::vector<char> kinked_;
};

struct PopulationSeries {
  std::vector<double> times;
  std::vector<std::vector<double>> p;  // [time][level], level 0 is p_n
};

// Populations at every grid node.
inline PopulationSeries populations(std::vector<WavePacket> packets, const UniformGrid& grid, WeightOptions opts = {}) {
  const GeneratorClosedForm cf(std::move(packets), grid, opts);
  PopulationSeries out;
  for (std::size_t i = 0; i < grid.nodes(); ++i) {
    out.times.push_back(grid.time(i));
    out.p.push_back(cf.populations(grid.time(i)));
  }
  return out;
}

struct NormIdentity {
  double lhs = 0.0;  // norm of the time-ordered iterated integral, by nested quadrature
  double rhs = 0.0;  // prod_{k<n} sqrt(c_k) from the survival weights
  double residual = 0.0;
};

inline constexpr std::size_t kMaxNormIdentityPhotons = 4;

// lhs^2 = int_{0 < s_1 < ... < s_n} prod |xi_k(s_k)|^2, the squared norm of the emitted n-photon field.
inline NormIdentity norm_identity(std::vector<WavePacket> packets, const UniformGrid& grid, WeightOptions opts = {}) {
  if (packets.empty()) throw ValidationError("norm_identity: need at least one packet");
  if (packets.size() > kMaxNormIdentityPhotons) throw ValidationError("norm_identity: at most 4 photons supported");
  const GeneratorClosedForm cf(std::move(packets), grid, opts);
  NormIdentity r;
  r.lhs = std::sqrt(cf.iterated(cf.photons(), grid.t_max));
  r.rhs = std::sqrt(cf.weights().norm_const_product());
  r.residual = std::abs(r.lhs - r.rhs);
  return r;
}

// Propagates the two-level source alone up to T and returns the largest
// deviation of its (upper, lower) populations from (w(t), int_0^t |xi|^2).
inline double single_photon_state_check(const WavePacket& packet, double T, const GeneratorOptions& gopts,
                                        std::size_t steps = 10000) {
  if (!(T > 0.0) || T > gopts.t_max) throw ValidationError("single_photon_state_check: need 0 < T <= grid t_max");
  const CmpGenerator gen = single_photon_generator(packet, gopts);
  MasterOptions mo;
  mo.dt = T / static_cast<double>(steps);
  mo.steps = steps;
  const MasterResult res = propagate(SLHTriple::trivial(1), gen, basis_vector(1, 0), mo, {});
  const double n2 = packet.norm_squared();
  double worst = 0.0;
  for (std::size_t i = 0; i < res.times.size(); ++i) {
    const double t = res.times[i];
    const double w = packet.tail_mass(t) / n2;
    const double emitted = (n2 - packet.tail_mass(t)) / n2;
    worst = std::max(worst, std::abs(res.aux_populations[i][0] - w));
    worst = std::max(worst, std::abs(res.aux_populations[i][1] - emitted));
  }
  return worst;
}

}  // namespace cmptraj

#endif  // CMPTRAJ_ORACLE_HPP
