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

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>

#include "zipcoll/codebook.h"
#include "zipcoll/error.h"
#include "zipcoll/random.h"

namespace zipcoll {
namespace {

// ---- oracles ---------------------------------------------------------------------

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15 * eps) {
    return left + right + (left + right - whole) / 15;
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, left, eps / 2, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, eps / 2, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double eps = 1e-14) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return adaptive_simpson(f, a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), eps, 60);
}

// P(2^x <= |w| < 2^(x+7)) for w ~ N(0, sigma^2), by quadrature of the density.
double coverage_by_quadrature(double sigma, double x) {
  const double pi = 3.14159265358979323846;
  const auto pdf = [&](double w) {
    return std::exp(-0.5 * (w / sigma) * (w / sigma)) / (sigma * std::sqrt(2 * pi));
  };
  const double lo = std::ldexp(1.0, 0) * std::exp2(x);
  const double hi = std::min(std::exp2(x + 7), 40.0 * sigma);
  if (lo >= hi) return 0.0;
  return 2.0 * integrate(pdf, lo, hi);
}

int exhaustive_best_integer_base(double sigma) {
  int best = -60;
  for (int x = -60; x <= 60; ++x) {
    if (window_coverage(sigma, x) > window_coverage(sigma, best)) best = x;
  }
  return best;
}

std::set<int> histogram_top7(std::span<const Bf16> data) {
  const auto h = exponent_histogram(data);
  std::vector<int> idx(256);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return h[a] > h[b]; });
  return {idx.begin(), idx.begin() + 7};
}

std::set<int> entry_set(const ExponentCodebook& cb) {
  return {cb.entries().begin(), cb.entries().end()};
}

// ---- tests -----------------------------------------------------------------------

TEST(Codebook, OptimumConstant) {
  EXPECT_NEAR(kWindowOptimumU, std::sqrt(7.0 * std::log(2.0) / 16383.0), 1e-15);
  EXPECT_NEAR(kWindowOptimumU, 0.0172, 5e-5);
}

TEST(Codebook, CoverageMatchesQuadrature) {
  for (double sigma : {1e-3, 0.02, 0.5, 1.0, 3.0, 1e3}) {
    for (double dx = -9.0; dx <= 3.0; dx += 0.75) {
      const double x = std::log2(sigma) + dx;
      EXPECT_NEAR(window_coverage(sigma, x), coverage_by_quadrature(sigma, x), 1e-10)
          << "sigma=" << sigma << " x=" << x;
    }
  }
}

TEST(Codebook, CoverageTailsStayAccurate) {
  // Far above sigma the window holds almost nothing; the erfc form must not
  // cancel to zero or go negative.
  const double c = window_coverage(1.0, 2.5);
  EXPECT_GT(c, 0.0);
  EXPECT_NEAR(c / coverage_by_quadrature(1.0, 2.5), 1.0, 1e-6);
}

TEST(Codebook, ContinuousOptimumIsStationary) {
  for (double sigma : {std::ldexp(1.0, -10), 0.3, 1.0, 7.0, std::ldexp(1.0, 10)}) {
    const double x = optimal_base_exponent(sigma);
    const double h = 1e-4;
    const double d1 = (window_coverage(sigma, x + h) - window_coverage(sigma, x - h)) / (2 * h);
    const double d2 = (window_coverage(sigma, x + h) - 2 * window_coverage(sigma, x) +
                       window_coverage(sigma, x - h)) / (h * h);
    EXPECT_NEAR(d1, 0.0, 1e-6) << sigma;
    EXPECT_LT(d2, 0.0) << sigma;
    EXPECT_NEAR(x - std::log2(sigma), 0.5 * std::log2(14 * std::log(2.0) / 16383), 1e-12);
  }
  EXPECT_NEAR(optimal_base_exponent(1.0), -5.3607, 1e-4);
  EXPECT_NEAR(optimal_base_exponent(1.0), -5.35, 0.02);
}

TEST(Codebook, IntegerBaseMatchesExhaustiveSweep) {
  for (int i = -10; i <= 10; ++i) {
    const double sigma = std::ldexp(1.0, i);
    EXPECT_EQ(optimal_integer_base(sigma), exhaustive_best_integer_base(sigma)) << sigma;
    for (double f : {1.1, 1.37, 1.5, 1.8}) {
      EXPECT_EQ(optimal_integer_base(sigma * f), exhaustive_best_integer_base(sigma * f)) << sigma * f;
    }
  }
  EXPECT_EQ(optimal_integer_base(1.0), -5);
}

TEST(Codebook, DeriveMatchesHistogramTop7) {
  for (int i = -10; i <= 10; i += 2) {
    const double sigma = std::ldexp(1.0, i);
    const Bf16Buffer data = normal_buffer(200000, sigma, 100 + i);
    EXPECT_EQ(entry_set(derive_codebook(sigma)), histogram_top7(data)) << sigma;
  }
  const auto e = derive_codebook(1.0).entries();
  EXPECT_EQ(e[0], 122);
  EXPECT_EQ(e[6], 128);
}

TEST(Codebook, TopKCoverageOfStandardNormal) {
  // Reference percentages for N(0, 1) in BF16.
  const double expected[7] = {29.9, 57.2, 75.7, 85.5, 90.4, 95.0, 97.5};
  const Bf16Buffer data = normal_buffer(1000000, 1.0, 2024);
  auto h = exponent_histogram(data);
  std::sort(h.begin(), h.end(), std::greater<>());
  double cum = 0;
  for (int k = 0; k < 7; ++k) {
    cum += static_cast<double>(h[k]);
    EXPECT_NEAR(100.0 * cum / static_cast<double>(data.size()), expected[k], 0.5) << "k=" << k + 1;
  }
}

TEST(Codebook, BinProbabilitiesMatchErf) {
  // P(2^e <= |w| < 2^(e+1)) in closed form vs the sample histogram.
  const Bf16Buffer data = normal_buffer(1000000, 1.0, 77);
  const auto h = exponent_histogram(data);
  for (int e = -6; e <= 1; ++e) {
    const double p = std::erf(std::exp2(e + 1) / std::sqrt(2.0)) - std::erf(std::exp2(e) / std::sqrt(2.0));
    // BF16 rounding moves a sliver of mass across bin edges; allow for it.
    EXPECT_NEAR(static_cast<double>(h[127 + e]) / 1e6, p, 0.004) << e;
  }
}

TEST(Codebook, ContiguousWindowIsShiftedIntoRange) {
  EXPECT_EQ(ExponentCodebook::contiguous(-200).entries()[0], kMinWindowStart);
  EXPECT_EQ(ExponentCodebook::contiguous(200).entries()[6], 254);
  const auto cb = ExponentCodebook::contiguous(0);
  for (int i = 0; i < 7; ++i) {
    EXPECT_EQ(cb.entries()[i], 127 + i);
    EXPECT_EQ(cb.code_for(static_cast<uint8_t>(127 + i)), i + 1);
  }
  EXPECT_EQ(cb.code_for(126), 0);
  EXPECT_FALSE(cb.contains(255));
}

TEST(Codebook, RejectsDuplicateEntries) {
  EXPECT_THROW(ExponentCodebook({1, 2, 3, 4, 5, 6, 6}), Error);
  EXPECT_NO_THROW(ExponentCodebook({0, 255, 3, 9, 5, 6, 200}));
}

TEST(Codebook, MeasureSigma) {
  EXPECT_NEAR(measure_sigma(normal_buffer(1000000, 1.0, 1)), 1.0, 0.01);
  EXPECT_NEAR(measure_sigma(normal_buffer(100000, 0.01, 1)), 0.01, 2e-4);
  Bf16Buffer with_inf = normal_buffer(1000, 1.0, 1);
  with_inf.push_back(Bf16(0x7F80));
  with_inf.push_back(Bf16(0x7FC0));
  EXPECT_TRUE(std::isfinite(measure_sigma(with_inf)));
  try {
    measure_sigma({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateInput);
  }
  EXPECT_THROW(measure_sigma(Bf16Buffer(4, Bf16(0x7FC0))), Error);
}

TEST(Codebook, SelectFallsBackForDegenerateData) {
  // All zeros: sigma 0, nothing in [1, 254] -> fallback window.
  EXPECT_EQ(select_codebook(Bf16Buffer(10, Bf16(0)), std::nullopt),
            ExponentCodebook::contiguous(kFallbackBaseExponent));
  // Constant 1.0: sigma 0, modal exponent 127 is covered.
  EXPECT_TRUE(select_codebook(constant_buffer(8, 1.0), std::nullopt).contains(127));
  // All NaN: no finite values.
  EXPECT_EQ(select_codebook(Bf16Buffer(10, Bf16(0x7FC0)), std::nullopt),
            ExponentCodebook::contiguous(kFallbackBaseExponent));
  // An explicit sigma wins over measurement.
  EXPECT_EQ(select_codebook(constant_buffer(8, 1.0), 1.0), derive_codebook(1.0));
}

TEST(Codebook, RejectsBadSigma) {
  EXPECT_THROW(derive_codebook(0.0), Error);
  EXPECT_THROW(derive_codebook(-1.0), Error);
  EXPECT_THROW(derive_codebook(std::nan("")), Error);
}

}  // namespace
}  // namespace zipcoll
