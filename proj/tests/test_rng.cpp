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
#include <set>

#include <gtest/gtest.h>

#include <cmptraj/rng.hpp>

namespace cmptraj {
namespace {

// Known-answer vectors of Philox4x32-10.
TEST(Philox, KnownAnswers) {
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}), (Philox4x32{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
            (Philox4x32{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
            (Philox4x32{0xd16cfe09u, 0x94fdcceb, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, IsConstexpr) {
  constexpr Philox4x32 x = philox4x32_10({0, 0, 0, 0}, {0, 0});
  static_assert(x[0] == 0x6627e8d5u);
  SUCCEED();
}

TEST(RandomStream, StatelessAndReproducible) {
  const RandomStream a(42, 7), b(42, 7);
  EXPECT_EQ(a.draw(123456), b.draw(123456));
  EXPECT_EQ(a.normal(5), a.normal(5));
  EXPECT_EQ(a.trajectory(), 7u);
  EXPECT_NE(a.draw(0), RandomStream(42, 8).draw(0));
  EXPECT_NE(a.draw(0), RandomStream(43, 7).draw(0));
  // The high seed word matters.
  EXPECT_NE(RandomStream(1, 0).draw(0), RandomStream(1 + (std::uint64_t{1} << 32), 0).draw(0));
}

TEST(RandomStream, UniformInOpenInterval) {
  EXPECT_EQ(to_open_unit(0), 0x1.0p-53);
  EXPECT_EQ(to_open_unit(~std::uint64_t{0}), 1.0 - 0x1.0p-53);
  const RandomStream s(9, 0);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double u = s.uniform(static_cast<std::uint64_t>(k));
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sum2 += u * u;
  }
  const double mean = sum / n, var = sum2 / n - mean * mean;
  EXPECT_NEAR(mean, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(var, 1.0 / 12.0, 1e-3);
}

TEST(RandomStream, NormalMoments) {
  const RandomStream s(2026, 3);
  const int n = 400000;
  double m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double z = s.normal(static_cast<std::uint64_t>(k));
    m1 += z;
    m2 += z * z;
    m3 += z * z * z;
    m4 += z * z * z * z;
  }
  m1 /= n;
  m2 /= n;
  m3 /= n;
  m4 /= n;
  const double se = 1.0 / std::sqrt(static_cast<double>(n));
  EXPECT_NEAR(m1, 0.0, 5.0 * se);
  EXPECT_NEAR(m2, 1.0, 5.0 * std::sqrt(2.0) * se);
  EXPECT_NEAR(m3, 0.0, 5.0 * std::sqrt(15.0) * se);
  EXPECT_NEAR(m4, 3.0, 5.0 * std::sqrt(96.0) * se);
}

TEST(RandomStream, StreamsDoNotCollide) {
  std::set<Philox4x32> seen;
  for (std::uint64_t traj = 0; traj < 64; ++traj)
    for (std::uint64_t step = 0; step < 64; ++step) seen.insert(RandomStream(5, traj).draw(step));
  EXPECT_EQ(seen.size(), 64u * 64u);
}

}  // namespace
}  // namespace cmptraj
