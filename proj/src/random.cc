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

#include "zipcoll/random.h"

#include <cmath>

namespace zipcoll {

Bf16Buffer normal_buffer(uint64_t n, double sigma, uint64_t seed, double mean) {
  SampleSource src(seed);
  Bf16Buffer out(n);
  for (auto& w : out) w = Bf16::from_double(mean + sigma * src.normal());
  return out;
}

Bf16Buffer lognormal_buffer(uint64_t n, double mu, double sigma, uint64_t seed) {
  SampleSource src(seed);
  Bf16Buffer out(n);
  for (auto& w : out) w = Bf16::from_double(std::exp(mu + sigma * src.normal()));
  return out;
}

Bf16Buffer constant_buffer(uint64_t n, double value) {
  return Bf16Buffer(n, Bf16::from_double(value));
}

}  // namespace zipcoll
