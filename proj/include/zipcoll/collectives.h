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
#include <optional>
#include <span>
#include <vector>

#include "zipcoll/bf16.h"
#include "zipcoll/communicator.h"

namespace zipcoll {

// Gaussian scale used to derive the codebook. std::nullopt measures it on the
// rank's own send data (see select_codebook). One codebook per rank per call.
using SigmaArg = std::optional<double>;
inline constexpr std::nullopt_t kMeasureSigma = std::nullopt;

struct AlltoAllSpec {
  std::vector<Bf16Buffer> send;         // send[q] goes to rank q
  std::vector<uint64_t> recv_counts;    // elements expected from each rank
};

struct ReduceScatterSpec {
  Bf16Buffer input;   // size() * shard_len elements, shard q belongs to rank q
  uint64_t shard_len = 0;
};

// Uncompressed collectives. They exchange counts first, so inconsistent
// arguments fail with kProtocol before any payload moves.
Bf16Buffer reference_all_gather(Communicator& comm, std::span<const Bf16> local);
std::vector<Bf16Buffer> reference_all_to_all(Communicator& comm, const AlltoAllSpec& spec);
Bf16Buffer reference_reduce_scatter(Communicator& comm, const ReduceScatterSpec& spec);
std::vector<float> reference_reduce_scatter_f32(Communicator& comm, const ReduceScatterSpec& spec);

// compress -> all-gather of frame sizes -> all-gather of frames -> decompress.
Bf16Buffer zip_all_gather(Communicator& comm, std::span<const Bf16> local, SigmaArg sigma);

// compress per peer -> all-to-all of (count, frame size) -> frames -> decompress.
std::vector<Bf16Buffer> zip_all_to_all_d1(Communicator& comm, const AlltoAllSpec& spec,
                                          SigmaArg sigma);

// compress per peer -> static sections (pre-sized from the counts, no size
// exchange) -> dynamic sizes -> dynamic sections -> decompress.
std::vector<Bf16Buffer> zip_all_to_all_d2(Communicator& comm, const AlltoAllSpec& spec,
                                          SigmaArg sigma);

// Design-2 all-to-all of the shards followed by a local FP32 reduction in
// ascending rank order, rounded to BF16 (nearest-even).
Bf16Buffer zip_reduce_scatter(Communicator& comm, const ReduceScatterSpec& spec, SigmaArg sigma);
std::vector<float> zip_reduce_scatter_f32(Communicator& comm, const ReduceScatterSpec& spec,
                                          SigmaArg sigma);

// zip_reduce_scatter followed by zip_all_gather of the reduced shard.
Bf16Buffer zip_all_reduce(Communicator& comm, std::span<const Bf16> input, SigmaArg sigma);

// acc = float(shards[0][i]); acc += float(shards[r][i]) for r = 1, 2, ...
std::vector<float> reduce_shards_f32(std::span<const Bf16Buffer> shards);
Bf16Buffer round_to_bf16(std::span<const float> values);

}  // namespace zipcoll
