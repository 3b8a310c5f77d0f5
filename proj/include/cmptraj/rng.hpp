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

// Counter-based random numbers (Philox4x32-10). A draw is a pure function of
// (master seed, trajectory index, step index), so trajectories can be run in
// any order, on any worker, and replayed without storing state.

#ifndef CMPTRAJ_RNG_HPP
#define CMPTRAJ_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace cmptraj {

using Philox4x32 = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

constexpr Philox4x32 philox_round(const Philox4x32& c, const PhiloxKey& k) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace detail

constexpr Philox4x32 philox4x32_10(Philox4x32 ctr, PhiloxKey key) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += detail::kPhiloxW0;
      key[1] += detail::kPhiloxW1;
    }
    ctr = detail::philox_round(ctr, key);
  }
  return ctr;
}

// Uniform double in the open interval (0, 1) from 52 random bits; every value is exact,
// so the extremes are 2^-53 and 1 - 2^-53.
constexpr double to_open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

// Stream of one trajectory. draw(step) is stateless; the same step always yields the same bits.
class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::uint64_t trajectory)
      : key_{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32)},
        traj_(trajectory) {}

  Philox4x32 draw(std::uint64_t step) const {
    return philox4x32_10({static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                          static_cast<std::uint32_t>(traj_), static_cast<std::uint32_t>(traj_ >> 32)},
                         key_);
  }

  double uniform(std::uint64_t step) const {
    const Philox4x32 x = draw(step);
    return to_open_unit((static_cast<std::uint64_t>(x[1]) << 32) | x[0]);
  }

  // Box-Muller on the two 64-bit halves of one block; returns the cosine branch.
  double normal(std::uint64_t step) const {
    const Philox4x32 x = draw(step);
    const double u1 = to_open_unit((static_cast<std::uint64_t>(x[1]) << 32) | x[0]);
    const double u2 = to_open_unit((static_cast<std::uint64_t>(x[3]) << 32) | x[2]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t trajectory() const noexcept { return traj_; }

 private:
  PhiloxKey key_;
  std::uint64_t traj_;
};

}  // namespace cmptraj

#endif  // CMPTRAJ_RNG_HPP
