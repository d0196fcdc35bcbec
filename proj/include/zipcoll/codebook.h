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

#include <array>
#include <cstdint>
#include <optional>
#include <span>

#include "zipcoll/bf16.h"

namespace zipcoll {

inline constexpr int kCodebookSize = 7;

// Lowest/highest biased exponent an analytically derived window may start at.
// Windows are shifted (not truncated) so all seven entries stay distinct and
// inside the finite, normal range [1, 254].
inline constexpr int kMinWindowStart = 1;
inline constexpr int kMaxWindowStart = 254 - (kCodebookSize - 1);

// Base exponent used when data carries no usable magnitude information
// (e.g. an all-zero buffer). Any choice is lossless.
inline constexpr int kFallbackBaseExponent = -6;

// Seven biased exponents; entry i is encoded as the 3-bit code i + 1 and code 0
// is the zero-point escape.
class ExponentCodebook {
 public:
  // Throws kInvalidArgument if the entries are not pairwise distinct.
  explicit ExponentCodebook(const std::array<uint8_t, kCodebookSize>& entries);

  // The window {start, ..., start + 6} with biased start = base + 127, shifted
  // into [kMinWindowStart, kMaxWindowStart].
  static ExponentCodebook contiguous(int base_exponent);

  const std::array<uint8_t, kCodebookSize>& entries() const { return entries_; }
  // Unbiased exponent of the first entry.
  int base() const { return static_cast<int>(entries_[0]) - 127; }

  // 3-bit code for a biased exponent, 0 if it escapes.
  uint8_t code_for(uint8_t biased_exponent) const { return code_of_[biased_exponent]; }
  bool contains(uint8_t biased_exponent) const { return code_of_[biased_exponent] != 0; }

  friend bool operator==(const ExponentCodebook& a, const ExponentCodebook& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::array<uint8_t, kCodebookSize> entries_{};
  std::array<uint8_t, 256> code_of_{};
};

// sqrt(7 ln2 / 16383): the value of 2^x / (sigma * sqrt(2)) at which the
// coverage of a 7-exponent window stops growing.
extern const double kWindowOptimumU;

// Probability that |w| lies in [2^x, 2^(x+7)) for w ~ N(0, sigma^2).
// x is real so the function can be differentiated; codebooks use integer x.
double window_coverage(double sigma, double x);

// log2(sigma) + 0.5 * log2(14 ln2 / 16383), the continuous maximiser of
// window_coverage.
double optimal_base_exponent(double sigma);

// Integer base chosen between floor and ceil of the optimum by larger
// coverage (tie -> floor).
int optimal_integer_base(double sigma);

ExponentCodebook derive_codebook(double sigma);

// Population standard deviation over the finite elements.
// Throws kDegenerateInput for empty input or no finite elements.
double measure_sigma(std::span<const Bf16> data);

// Codebook centred on the most frequent biased exponent in [1, 254]
// (ties -> smaller exponent); kFallbackBaseExponent if there is none.
ExponentCodebook modal_codebook(std::span<const Bf16> data);

// Codebook selection used by the collectives: derive from `sigma` when given,
// otherwise measure it, falling back to modal_codebook when the measured
// statistic is zero, non-finite or undefined.
ExponentCodebook select_codebook(std::span<const Bf16> data, std::optional<double> sigma);

// Exact histogram of biased exponents (sign ignored).
std::array<uint64_t, 256> exponent_histogram(std::span<const Bf16> data);

}  // namespace zipcoll
