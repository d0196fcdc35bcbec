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

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zipcoll/collectives.h"
#include "zipcoll/communicator.h"

namespace zipcoll {

// Linear latency/bandwidth models for the two reduce-scatter paths:
//
//   T_rs(d)  = alpha_rs  + beta_rs  * d
//   T_a2a(d) = alpha_a2a + beta_a2a * e * s * d
//
// d is the native payload in bytes per rank, e the compressed/original byte
// ratio of the codec and s = bytes per zip-path element / bytes per native
// element (1 when both paths move BF16, 0.5 for an FP32 native path).
struct CostModel {
  double alpha_rs = 0.0;   // s
  double beta_rs = 0.0;    // s / byte
  double alpha_a2a = 0.0;
  double beta_a2a = 0.0;
  double e = 1.0;
  double s = 1.0;
  double rms_rs = 0.0;     // fit residuals, s
  double rms_a2a = 0.0;

  // Throws kInvalidArgument unless alphas, betas >= 0, e in (0, 1], s > 0.
  void check() const;
  bool operator==(const CostModel&) const = default;
};

struct Prediction {
  double t_rs = 0.0;
  double t_a2a = 0.0;
};

enum class RsPath { kNative, kZipped };

const char* to_string(RsPath path);

Prediction predict(const CostModel& model, double d);

// kZipped iff t_a2a < t_rs; ties (and everything else) go native.
RsPath select(const CostModel& model, double d);

// Payload size where the two models intersect, or a negative value when they
// never cross for d > 0 (parallel lines or one path dominates everywhere).
double crossover(const CostModel& model);

struct LinearFit {
  double alpha = 0.0;
  double beta = 0.0;
  double rms = 0.0;
};

// Ordinary least squares t = alpha + beta * d. Needs two distinct d values.
LinearFit fit_linear(std::span<const double> d, std::span<const double> t);

struct ProfileOptions {
  std::vector<uint64_t> sizes{64ull << 10, 1ull << 20, 16ull << 20, 64ull << 20};
  int trials = 5;
  double s = 1.0;
  uint64_t seed = 1;
  SigmaArg sigma = kMeasureSigma;
};

// One profiled point, kept for diagnostics.
struct ProfileSample {
  double d = 0.0;        // bytes actually used (rounded down to whole shards)
  double t_rs = 0.0;     // median over trials of the slowest rank
  double t_a2a = 0.0;
  double e = 0.0;
};

struct ProfileResult {
  CostModel model;
  std::vector<ProfileSample> samples;
};

// Collective: every rank must call it with the same options. Times the
// reference reduce-scatter and the compressed one at each size on seeded
// N(0, 1) payloads and fits both models. Every rank returns the same model.
// Throws kInvalidArgument for fewer than two distinct sizes or trials < 1,
// kProfiling if the transport fails underneath.
ProfileResult profile(Communicator& comm, const ProfileOptions& options = {});

// key=value text; values print in shortest round-trip form.
std::string to_text(const CostModel& model);
CostModel parse_cost_model(std::string_view text);
CostModel load_cost_model(const std::string& path);
void save_cost_model(const CostModel& model, const std::string& path);

struct AutoReduceScatterResult {
  RsPath path = RsPath::kNative;
  Bf16Buffer output;
};

// Picks the path for d = 2 * input.size() bytes and runs it.
AutoReduceScatterResult auto_reduce_scatter(Communicator& comm, const CostModel& model,
                                            const ReduceScatterSpec& spec, SigmaArg sigma);

}  // namespace zipcoll
