// Copyright 2026 The zipcoll Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "zipcoll/bf16.h"
#include "zipcoll/random.h"

namespace zipcoll {
namespace {

float f32(uint32_t bits) { return std::bit_cast<float>(bits); }

TEST(Bf16, FieldAccessors) {
  const Bf16 v(0xC0A5);  // 1 10000001 0100101
  EXPECT_EQ(v.sign(), 1);
  EXPECT_EQ(v.biased_exponent(), 0x81);
  EXPECT_EQ(v.mantissa(), 0x25);
  EXPECT_TRUE(v.is_finite());
  EXPECT_FALSE(Bf16(0x7F80).is_finite());
  EXPECT_EQ(Bf16(0x3F80).to_float(), 1.0f);
}

TEST(Bf16, FromFloatRoundsNearestEven) {
  EXPECT_EQ(Bf16::from_float(1.0f).bits, 0x3F80);
  EXPECT_EQ(Bf16::from_float(f32(0x3F808000)).bits, 0x3F80);  // tie, even stays
  EXPECT_EQ(Bf16::from_float(f32(0x3F818000)).bits, 0x3F82);  // tie, odd rounds up
  EXPECT_EQ(Bf16::from_float(f32(0x3F808001)).bits, 0x3F81);
  EXPECT_EQ(Bf16::from_float(f32(0x3F807FFF)).bits, 0x3F80);
  EXPECT_EQ(Bf16::from_float(-0.0f).bits, 0x8000);
  EXPECT_EQ(Bf16::from_float(f32(0x7F7FFFFF)).bits, 0x7F80);  // overflows to inf
  EXPECT_EQ(Bf16::from_float(std::numeric_limits<float>::infinity()).bits, 0x7F80);
}

TEST(Bf16, FromFloatKeepsNaN) {
  EXPECT_EQ(Bf16::from_float(f32(0x7FC00000)).bits, 0x7FC0);
  EXPECT_EQ(Bf16::from_float(f32(0xFF800001)).bits, 0xFFC0);  // signalling, low payload
  EXPECT_TRUE(std::isnan(Bf16::from_float(f32(0x7F800001)).to_float()));
}

TEST(Bf16, FromFloatMatchesExhaustiveOracleOnUpperHalves) {
  // For every bf16 pattern b, the floats b<<16 | low round to b, or to b + 1
  // above the midpoint (and at it when b is odd).
  for (uint32_t b = 0; b < 0x10000; b += 7) {
    const Bf16 v(static_cast<uint16_t>(b));
    if (!v.is_finite()) continue;
    const uint32_t base = b << 16;
    EXPECT_EQ(Bf16::from_float(f32(base)).bits, b);
    EXPECT_EQ(Bf16::from_float(f32(base | 0x7FFF)).bits, b);
    EXPECT_EQ(Bf16::from_float(f32(base | 0x8001)).bits, (b + 1) & 0xFFFF);
    EXPECT_EQ(Bf16::from_float(f32(base | 0x8000)).bits, (b & 1) ? ((b + 1) & 0xFFFF) : b);
  }
}

TEST(Bf16, FromDoubleAvoidsDoubleRounding) {
  // 1 + 2^-8 + 2^-40 rounds to float as exactly 1 + 2^-8 (a bf16 tie), which a
  // naive chain would then round down to 1.0.
  const double v = 1.0 + std::ldexp(1.0, -8) + std::ldexp(1.0, -40);
  EXPECT_EQ(Bf16::from_float(static_cast<float>(v)).bits, 0x3F80);
  EXPECT_EQ(Bf16::from_double(v).bits, 0x3F81);
  EXPECT_EQ(Bf16::from_double(1.0 + std::ldexp(1.0, -8)).bits, 0x3F80);
  EXPECT_EQ(Bf16::from_double(-(1.0 + std::ldexp(1.0, -8) + std::ldexp(1.0, -40))).bits, 0xBF81);
  EXPECT_EQ(Bf16::from_double(1e300).bits, 0x7F80);
  EXPECT_EQ(Bf16::from_double(0.1).bits, 0x3DCD);
}

TEST(Bf16, FromDoubleMatchesExactOracle) {
  // Exact oracle: pick the nearer of the two bracketing bf16 values in double
  // arithmetic (both are exactly representable), ties to even.
  SampleSource src(99);
  for (int i = 0; i < 200000; ++i) {
    const double x = src.normal() * std::ldexp(1.0, static_cast<int>(src.uniform() * 60) - 30);
    const uint16_t lo = static_cast<uint16_t>(std::bit_cast<uint32_t>(static_cast<float>(x)) >> 16);
    // Candidate neighbours around the truncation of the float.
    uint16_t best = 0;
    double best_err = std::numeric_limits<double>::infinity();
    for (int d = -1; d <= 1; ++d) {
      const uint16_t c = static_cast<uint16_t>(lo + d);
      const double err = std::abs(static_cast<double>(Bf16(c).to_float()) - x);
      if (err < best_err || (err == best_err && (c & 1) == 0)) {
        best = c;
        best_err = err;
      }
    }
    ASSERT_EQ(Bf16::from_double(x).bits, best) << "x=" << x;
  }
}

TEST(Random, DeterministicPerSeed) {
  EXPECT_EQ(normal_buffer(1000, 1.0, 5), normal_buffer(1000, 1.0, 5));
  EXPECT_NE(normal_buffer(1000, 1.0, 5), normal_buffer(1000, 1.0, 6));
  const auto c = constant_buffer(4, 1.0);
  for (Bf16 v : c) EXPECT_EQ(v.bits, 0x3F80);
}

TEST(Random, NormalMoments) {
  SampleSource src(3);
  double s = 0, s2 = 0;
  const int n = 400000;
  for (int i = 0; i < n; ++i) {
    const double x = src.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(Random, LognormalIsPositive) {
  for (Bf16 v : lognormal_buffer(10000, 0.0, 1.0, 2)) EXPECT_GT(v.to_float(), 0.0f);
}

}  // namespace
}  // namespace zipcoll
