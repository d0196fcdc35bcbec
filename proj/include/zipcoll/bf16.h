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

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

namespace zipcoll {

// A raw BF16 word: sign(1) | biased exponent(8) | mantissa(7). Every one of
// the 65536 patterns is a valid value for the codec, including NaN payloads.
struct Bf16 {
  uint16_t bits = 0;

  constexpr Bf16() = default;
  constexpr explicit Bf16(uint16_t b) : bits(b) {}

  constexpr uint8_t sign() const { return static_cast<uint8_t>(bits >> 15); }
  constexpr uint8_t biased_exponent() const { return static_cast<uint8_t>((bits >> 7) & 0xFF); }
  constexpr uint8_t mantissa() const { return static_cast<uint8_t>(bits & 0x7F); }
  constexpr bool is_finite() const { return biased_exponent() != 0xFF; }

  float to_float() const { return std::bit_cast<float>(static_cast<uint32_t>(bits) << 16); }

  // Round-to-nearest-even; NaNs stay NaN (quieted, sign and top payload kept).
  static Bf16 from_float(float value) {
    uint32_t u = std::bit_cast<uint32_t>(value);
    if (std::isnan(value)) {
      return Bf16(static_cast<uint16_t>((u >> 16) | 0x0040));
    }
    u += 0x7FFF + ((u >> 16) & 1);
    return Bf16(static_cast<uint16_t>(u >> 16));
  }

  // Round-to-nearest-even straight from FP64. The double is first narrowed to
  // FP32 with round-to-odd, which leaves 16 guard bits and so avoids the
  // double-rounding error of a plain double->float->bf16 chain.
  static Bf16 from_double(double value) {
    if (std::isnan(value)) {
      return from_float(static_cast<float>(value));
    }
    float f = static_cast<float>(value);
    if (std::fabs(static_cast<double>(f)) > std::fabs(value)) {
      f = std::nextafter(f, 0.0f);
    }
    if (static_cast<double>(f) != value) {
      f = std::bit_cast<float>(std::bit_cast<uint32_t>(f) | 1u);
    }
    return from_float(f);
  }

  friend constexpr bool operator==(Bf16, Bf16) = default;
};

static_assert(sizeof(Bf16) == 2);

using Bf16Buffer = std::vector<Bf16>;

}  // namespace zipcoll
