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

#include "zipcoll/codebook.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "zipcoll/error.h"

namespace zipcoll {

const double kWindowOptimumU = std::sqrt(7.0 * std::numbers::ln2 / 16383.0);

ExponentCodebook::ExponentCodebook(const std::array<uint8_t, kCodebookSize>& entries)
    : entries_(entries) {
  for (int i = 0; i < kCodebookSize; ++i) {
    uint8_t e = entries_[i];
    if (code_of_[e] != 0) {
      fail(ErrorCode::kInvalidArgument,
           "duplicate exponent " + std::to_string(e) + " in codebook", "codebook");
    }
    code_of_[e] = static_cast<uint8_t>(i + 1);
  }
}

ExponentCodebook ExponentCodebook::contiguous(int base_exponent) {
  int start = std::clamp(base_exponent + 127, kMinWindowStart, kMaxWindowStart);
  std::array<uint8_t, kCodebookSize> entries{};
  for (int i = 0; i < kCodebookSize; ++i) {
    entries[i] = static_cast<uint8_t>(start + i);
  }
  return ExponentCodebook(entries);
}

namespace {

void require_sigma(double sigma) {
  if (!std::isfinite(sigma) || sigma <= 0.0) {
    fail(ErrorCode::kInvalidArgument, "sigma must be positive and finite, got " + std::to_string(sigma),
         "sigma");
  }
}

}  // namespace

double window_coverage(double sigma, double x) {
  require_sigma(sigma);
  const double scale = 1.0 / (sigma * std::numbers::sqrt2);
  const double lo = std::exp2(x) * scale;
  const double hi = std::exp2(x + kCodebookSize) * scale;
  // erfc keeps precision once both bounds are far into the tail.
  if (lo > 0.5) {
    return std::erfc(lo) - std::erfc(hi);
  }
  return std::erf(hi) - std::erf(lo);
}

double optimal_base_exponent(double sigma) {
  require_sigma(sigma);
  return std::log2(sigma) + 0.5 * std::log2(14.0 * std::numbers::ln2 / 16383.0);
}

int optimal_integer_base(double sigma) {
  const double x = optimal_base_exponent(sigma);
  const double lo = std::floor(x);
  const double hi = std::ceil(x);
  if (lo == hi) {
    return static_cast<int>(lo);
  }
  return window_coverage(sigma, hi) > window_coverage(sigma, lo) ? static_cast<int>(hi)
                                                                   : static_cast<int>(lo);
}

ExponentCodebook derive_codebook(double sigma) {
  return ExponentCodebook::contiguous(optimal_integer_base(sigma));
}

double measure_sigma(std::span<const Bf16> data) {
  if (data.empty()) {
    fail(ErrorCode::kDegenerateInput, "cannot measure sigma of an empty buffer");
  }
  // Two passes in double; the data are BF16 so the sums cannot overflow.
  double sum = 0.0;
  uint64_t n = 0;
  for (Bf16 w : data) {
    if (w.is_finite()) {
      sum += w.to_float();
      ++n;
    }
  }
  if (n == 0) {
    fail(ErrorCode::kDegenerateInput, "buffer has no finite elements");
  }
  const double mean = sum / static_cast<double>(n);
  double sq = 0.0;
  for (Bf16 w : data) {
    if (w.is_finite()) {
      const double d = static_cast<double>(w.to_float()) - mean;
      sq += d * d;
    }
  }
  return std::sqrt(sq / static_cast<double>(n));
}

std::array<uint64_t, 256> exponent_histogram(std::span<const Bf16> data) {
  std::array<uint64_t, 256> hist{};
  for (Bf16 w : data) {
    ++hist[w.biased_exponent()];
  }
  return hist;
}

ExponentCodebook modal_codebook(std::span<const Bf16> data) {
  const auto hist = exponent_histogram(data);
  int mode = -1;
  uint64_t best = 0;
  for (int e = 1; e <= 254; ++e) {
    if (hist[e] > best) {
      best = hist[e];
      mode = e;
    }
  }
  if (mode < 0) {
    return ExponentCodebook::contiguous(kFallbackBaseExponent);
  }
  // Put the mode in the middle of the window.
  return ExponentCodebook::contiguous(mode - 127 - kCodebookSize / 2);
}

ExponentCodebook select_codebook(std::span<const Bf16> data, std::optional<double> sigma) {
  if (sigma) {
    return derive_codebook(*sigma);
  }
  if (data.empty()) {
    return ExponentCodebook::contiguous(kFallbackBaseExponent);
  }
  double measured = 0.0;
  try {
    measured = measure_sigma(data);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateInput) throw;
    return modal_codebook(data);
  }
  if (!std::isfinite(measured) || measured <= 0.0) {
    return modal_codebook(data);
  }
  return derive_codebook(measured);
}

}  // namespace zipcoll
