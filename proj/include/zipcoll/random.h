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

#include <cmath>
#include <cstdint>
#include <random>

#include "zipcoll/bf16.h"

namespace zipcoll {

// Seeded sample source whose output is identical on every platform:
// mt19937_64 is fully specified by the standard, and the Gaussian transform is
// done here (std::normal_distribution is implementation-defined).
class SampleSource {
 public:
  explicit SampleSource(uint64_t seed) : engine_(seed) {}

  // Uniform in (0, 1).
  double uniform() {
    uint64_t bits;
    do {
      bits = engine_() >> 11;
    } while (bits == 0);
    return static_cast<double>(bits) * 0x1.0p-53;
  }

  // Box-Muller; caches the second variate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

Bf16Buffer normal_buffer(uint64_t n, double sigma, uint64_t seed, double mean = 0.0);
Bf16Buffer lognormal_buffer(uint64_t n, double mu, double sigma, uint64_t seed);
Bf16Buffer constant_buffer(uint64_t n, double value);

}  // namespace zipcoll
