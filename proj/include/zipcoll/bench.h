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
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zipcoll/bf16.h"
#include "zipcoll/codebook.h"
#include "zipcoll/collectives.h"
#include "zipcoll/communicator.h"
#include "zipcoll/switcher.h"

namespace zipcoll {

// ---- files -------------------------------------------------------------------

// .bf16 files are raw little-endian 16-bit words.
Bytes encode_bf16(std::span<const Bf16> data);
Bf16Buffer decode_bf16(std::span<const uint8_t> bytes);  // kFormat on odd length

Bytes read_file(const std::string& path);
void write_file(const std::string& path, std::span<const uint8_t> bytes);
Bf16Buffer read_bf16_file(const std::string& path);

// ---- exponent coverage -------------------------------------------------------

struct CoverageReport {
  uint64_t element_count = 0;
  std::array<uint64_t, 256> histogram{};
  // Up to seven biased exponents that occur, by descending frequency
  // (ties -> smaller exponent).
  std::vector<uint8_t> top;
  // top_k_percent[k - 1]: share of all elements covered by the k most frequent
  // exponents.
  std::array<double, kCodebookSize> top_k_percent{};
  std::optional<double> sigma;                // measured, if defined and > 0
  std::optional<ExponentCodebook> analytic;   // derive_codebook(*sigma)
  bool analytic_matches = false;              // same set as `top`
  // The closed-form codebook assumes zero-mean symmetric data. When the data
  // is visibly not like that, the analytic set is only a heuristic and the
  // histogram is authoritative.
  bool heuristic = false;
  std::string heuristic_reason;
};

// Throws kFormat for an empty buffer.
CoverageReport analyze_coverage(std::span<const Bf16> data);
std::string format_coverage(const CoverageReport& report);

// ---- benchmark records ---------------------------------------------------------

// One collective call, aggregated over ranks: byte counts are summed, the time
// is the slowest rank's.
struct BenchRecord {
  std::string operation;
  std::string transport;
  int world_size = 0;
  uint64_t element_count = 0;      // per rank
  uint64_t payload_bytes = 0;      // original bytes of chunks that crossed the wire
  uint64_t compressed_bytes = 0;   // bytes actually sent for them
  uint64_t metadata_bytes = 0;
  double time_s = 0.0;
  bool virtual_time = false;
  std::string path;                // auto-rs only: native | zipped
  bool verified = false;

  double ratio() const;
};

std::string csv_header();
std::string to_csv(const BenchRecord& record);
void write_csv(std::ostream& out, std::span<const BenchRecord> records);
std::vector<BenchRecord> parse_csv(const std::string& text);

// ---- collective runs -----------------------------------------------------------

struct BenchOptions {
  std::string op = "allgather";    // allgather | a2a-d1 | a2a-d2 | reducescatter | auto-rs | allreduce
  std::string transport = "loopback";
  std::vector<uint64_t> sizes{1 << 20};   // input bytes per rank
  uint64_t seed = 1;
  SigmaArg sigma = kMeasureSigma;
  bool verify = false;
  std::optional<CostModel> cost_model;    // required for auto-rs
};

const std::vector<std::string>& bench_operations();

// Collective over every rank. Returns one record per size (identical on all
// ranks). With `verify`, each result is compared bit-for-bit with the
// reference collective and every rank throws kVerification on any mismatch,
// naming the first differing element.
std::vector<BenchRecord> run_bench(Communicator& comm, const BenchOptions& options);

// Runs fn on one thread per endpoint of the group. When ranks fail, rethrows
// the most informative error: the first one that is not a consequence of
// another rank going away.
void run_ranks(TransportGroup group, const std::function<void(Communicator&)>& fn);

}  // namespace zipcoll
