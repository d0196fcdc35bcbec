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

#include "zipcoll/collectives.h"

#include <algorithm>
#include <string>

#include "zipcoll/codebook.h"
#include "zipcoll/codec.h"
#include "zipcoll/error.h"
#include "zipcoll/frame.h"

namespace zipcoll {

namespace {

using detail::recv_peer;
using detail::send_peer;

std::string peer_name(int peer) { return "peer " + std::to_string(peer); }

[[noreturn]] void protocol_error(int peer, const std::string& message) {
  fail(ErrorCode::kProtocol, message, peer_name(peer));
}

Bytes to_bytes(std::span<const Bf16> data) {
  Bytes b(2 * data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    b[2 * i] = static_cast<uint8_t>(data[i].bits);
    b[2 * i + 1] = static_cast<uint8_t>(data[i].bits >> 8);
  }
  return b;
}

Bf16Buffer from_bytes(const Bytes& b, uint64_t expected, int peer) {
  if (b.size() != 2 * expected) {
    protocol_error(peer, "expected " + std::to_string(2 * expected) + " payload bytes, got " +
                             std::to_string(b.size()));
  }
  Bf16Buffer out(expected);
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = Bf16(static_cast<uint16_t>(b[2 * i] | (b[2 * i + 1] << 8)));
  }
  return out;
}

Bytes encode_frame(std::span<const Bf16> data, const ExponentCodebook& codebook) {
  if (data.empty()) return {};
  return serialize(compress(data, codebook));
}

Bf16Buffer decode_frame(std::span<const uint8_t> frame, uint64_t expected, int peer) {
  if (expected == 0) {
    if (!frame.empty()) protocol_error(peer, "non-empty frame for an empty chunk");
    return {};
  }
  CompressedChunk chunk;
  try {
    chunk = parse(frame);
  } catch (const Error& e) {
    fail(e.code(), "frame from rank " + std::to_string(peer) + ": " + e.message(),
         peer_name(peer) + (e.field().empty() ? "" : ": " + e.field()));
  }
  if (chunk.element_count != expected) {
    protocol_error(peer, "frame holds " + std::to_string(chunk.element_count) +
                             " elements, expected " + std::to_string(expected));
  }
  return decompress(chunk);
}

ExponentCodebook codebook_for(const std::vector<Bf16Buffer>& parts, SigmaArg sigma) {
  if (sigma) return derive_codebook(*sigma);
  Bf16Buffer all;
  for (const auto& part : parts) all.insert(all.end(), part.begin(), part.end());
  return select_codebook(all, sigma);
}

void check_spec(const Communicator& comm, const AlltoAllSpec& spec) {
  const auto p = static_cast<size_t>(comm.size());
  if (spec.send.size() != p || spec.recv_counts.size() != p) {
    fail(ErrorCode::kInvalidArgument,
         "all-to-all needs one send buffer and one receive count per rank", "send");
  }
  const int r = comm.rank();
  if (spec.send[r].size() != spec.recv_counts[r]) {
    protocol_error(r, "local chunk has " + std::to_string(spec.send[r].size()) +
                          " elements, expected " + std::to_string(spec.recv_counts[r]));
  }
}

void check_rs(const Communicator& comm, const ReduceScatterSpec& spec) {
  if (spec.input.size() != spec.shard_len * static_cast<uint64_t>(comm.size())) {
    fail(ErrorCode::kInvalidArgument,
         "reduce-scatter input must hold world_size * shard_len elements", "input");
  }
}

AlltoAllSpec shards_to_spec(const Communicator& comm, const ReduceScatterSpec& spec) {
  const int p = comm.size();
  AlltoAllSpec a2a;
  a2a.send.resize(p);
  a2a.recv_counts.assign(p, spec.shard_len);
  for (int q = 0; q < p; ++q) {
    const auto begin = spec.input.begin() + static_cast<std::ptrdiff_t>(q * spec.shard_len);
    a2a.send[q].assign(begin, begin + static_cast<std::ptrdiff_t>(spec.shard_len));
  }
  return a2a;
}

// ---- unscoped implementations ------------------------------------------------

Bf16Buffer all_gather_zip(Communicator& comm, std::span<const Bf16> local, SigmaArg sigma) {
  const int p = comm.size();
  const int r = comm.rank();
  const uint64_t n = local.size();
  auto& stats = comm.mutable_stats();
  stats.element_count = n;
  Bf16Buffer out(n * p);
  std::copy(local.begin(), local.end(), out.begin() + static_cast<std::ptrdiff_t>(n * r));
  if (p == 1) return out;

  const Bytes frame = encode_frame(local, select_codebook(local, sigma));
  const uint64_t my_size[1] = {frame.size()};
  const auto sizes = detail::gather_words(comm, my_size, Tag::kSizes);

  for (int k = 1; k < p; ++k) {
    comm.send(send_peer(r, p, k), Tag::kPayload, frame);
    stats.original_bytes += 2 * n;
    stats.compressed_bytes += frame.size();
  }
  for (int k = 1; k < p; ++k) {
    const int peer = recv_peer(r, p, k);
    const Bytes bytes = comm.recv(peer, Tag::kPayload);
    if (bytes.size() != sizes[peer]) {
      protocol_error(peer, "frame is " + std::to_string(bytes.size()) + " bytes, announced " +
                               std::to_string(sizes[peer]));
    }
    const Bf16Buffer chunk = decode_frame(bytes, n, peer);
    std::copy(chunk.begin(), chunk.end(), out.begin() + static_cast<std::ptrdiff_t>(n * peer));
  }
  return out;
}

std::vector<Bytes> encode_per_peer(Communicator& comm, const AlltoAllSpec& spec, SigmaArg sigma) {
  const int p = comm.size();
  const int r = comm.rank();
  std::vector<Bytes> frames(p);
  bool any = false;
  for (int q = 0; q < p; ++q) any = any || (q != r && !spec.send[q].empty());
  if (!any) return frames;
  const ExponentCodebook codebook = codebook_for(spec.send, sigma);
  for (int q = 0; q < p; ++q) {
    if (q != r) frames[q] = encode_frame(spec.send[q], codebook);
  }
  auto& stats = comm.mutable_stats();
  for (int q = 0; q < p; ++q) {
    if (q == r) continue;
    stats.original_bytes += 2 * spec.send[q].size();
    stats.compressed_bytes += frames[q].size();
  }
  return frames;
}

uint64_t total_elements(const AlltoAllSpec& spec) {
  uint64_t n = 0;
  for (const auto& part : spec.send) n += part.size();
  return n;
}

std::vector<Bf16Buffer> all_to_all_d1(Communicator& comm, const AlltoAllSpec& spec, SigmaArg sigma) {
  check_spec(comm, spec);
  const int p = comm.size();
  const int r = comm.rank();
  comm.mutable_stats().element_count = total_elements(spec);
  std::vector<Bf16Buffer> out(p);
  out[r] = spec.send[r];
  if (p == 1) return out;

  const std::vector<Bytes> frames = encode_per_peer(comm, spec, sigma);
  std::vector<uint64_t> words(2 * p, 0);
  for (int q = 0; q < p; ++q) {
    words[2 * q] = spec.send[q].size();
    words[2 * q + 1] = frames[q].size();
  }
  const auto declared = detail::exchange_words(comm, words, 2, Tag::kSizes);
  for (int k = 1; k < p; ++k) {
    const int peer = recv_peer(r, p, k);
    if (declared[2 * peer] != spec.recv_counts[peer]) {
      protocol_error(peer, "rank " + std::to_string(peer) + " sends " +
                               std::to_string(declared[2 * peer]) + " elements, expected " +
                               std::to_string(spec.recv_counts[peer]));
    }
  }

  for (int k = 1; k < p; ++k) {
    const int peer = send_peer(r, p, k);
    comm.send(peer, Tag::kPayload, frames[peer]);
  }
  for (int k = 1; k < p; ++k) {
    const int peer = recv_peer(r, p, k);
    const Bytes bytes = comm.recv(peer, Tag::kPayload);
    if (bytes.size() != declared[2 * peer + 1]) {
      protocol_error(peer, "frame is " + std::to_string(bytes.size()) + " bytes, announced " +
                               std::to_string(declared[2 * peer + 1]));
    }
    out[peer] = decode_frame(bytes, spec.recv_counts[peer], peer);
  }
  return out;
}

std::vector<Bf16Buffer> all_to_all_d2(Communicator& comm, const AlltoAllSpec& spec, SigmaArg sigma) {
  check_spec(comm, spec);
  const int p = comm.size();
  const int r = comm.rank();
  comm.mutable_stats().element_count = total_elements(spec);
  std::vector<Bf16Buffer> out(p);
  out[r] = spec.send[r];
  if (p == 1) return out;

  const std::vector<Bytes> frames = encode_per_peer(comm, spec, sigma);
  std::vector<StaticDynamicSplit> parts(p);
  for (int q = 0; q < p; ++q) {
    if (q != r && !frames[q].empty()) parts[q] = split_static_dynamic(frames[q]);
  }

  // Static sections: the receiver knows their size from the element count.
  for (int k = 1; k < p; ++k) {
    const int peer = send_peer(r, p, k);
    comm.send(peer, Tag::kStatic, parts[peer].static_bytes);
  }
  std::vector<Bytes> statics(p);
  for (int k = 1; k < p; ++k) {
    const int peer = recv_peer(r, p, k);
    statics[peer] = comm.recv(peer, Tag::kStatic);
    const uint64_t count = spec.recv_counts[peer];
    const uint64_t expected = count == 0 ? 0 : container_static_size(count);
    if (statics[peer].size() != expected) {
      protocol_error(peer, "static section is " + std::to_string(statics[peer].size()) +
                               " bytes, expected " + std::to_string(expected) + " for " +
                               std::to_string(count) + " elements (count mismatch)");
    }
  }

  std::vector<uint64_t> dyn_sizes(p, 0);
  for (int q = 0; q < p; ++q) dyn_sizes[q] = parts[q].dynamic_bytes.size();
  const auto declared = detail::exchange_words(comm, dyn_sizes, 1, Tag::kDynamicSizes);

  for (int k = 1; k < p; ++k) {
    const int peer = send_peer(r, p, k);
    comm.send(peer, Tag::kDynamic, parts[peer].dynamic_bytes);
  }
  for (int k = 1; k < p; ++k) {
    const int peer = recv_peer(r, p, k);
    const Bytes dynamic = comm.recv(peer, Tag::kDynamic);
    if (dynamic.size() != declared[peer]) {
      protocol_error(peer, "dynamic section is " + std::to_string(dynamic.size()) +
                               " bytes, announced " + std::to_string(declared[peer]));
    }
    if (spec.recv_counts[peer] == 0) {
      if (!dynamic.empty()) protocol_error(peer, "dynamic bytes for an empty chunk");
      continue;
    }
    out[peer] = decode_frame(join_static_dynamic(statics[peer], dynamic), spec.recv_counts[peer], peer);
  }
  return out;
}

std::vector<Bf16Buffer> all_to_all_raw(Communicator& comm, const AlltoAllSpec& spec) {
  check_spec(comm, spec);
  const int p = comm.size();
  const int r = comm.rank();
  auto& stats = comm.mutable_stats();
  stats.element_count = total_elements(spec);
  std::vector<Bf16Buffer> out(p);
  out[r] = spec.send[r];
  if (p == 1) return out;

  std::vector<uint64_t> counts(p);
  for (int q = 0; q < p; ++q) counts[q] = spec.send[q].size();
  const auto declared = detail::exchange_words(comm, counts, 1, Tag::kCounts);
  for (int k = 1; k < p; ++k) {
    const int peer = recv_peer(r, p, k);
    if (declared[peer] != spec.recv_counts[peer]) {
      protocol_error(peer, "rank " + std::to_string(peer) + " sends " + std::to_string(declared[peer]) +
                               " elements, expected " + std::to_string(spec.recv_counts[peer]));
    }
  }
  for (int k = 1; k < p; ++k) {
    const int peer = send_peer(r, p, k);
    const Bytes b = to_bytes(spec.send[peer]);
    comm.send(peer, Tag::kPayload, b);
    stats.original_bytes += b.size();
    stats.compressed_bytes += b.size();
  }
  for (int k = 1; k < p; ++k) {
    const int peer = recv_peer(r, p, k);
    out[peer] = from_bytes(comm.recv(peer, Tag::kPayload), spec.recv_counts[peer], peer);
  }
  return out;
}

std::vector<float> reduce_scatter_zip(Communicator& comm, const ReduceScatterSpec& spec,
                                      SigmaArg sigma) {
  check_rs(comm, spec);
  const auto shards = all_to_all_d2(comm, shards_to_spec(comm, spec), sigma);
  return reduce_shards_f32(shards);
}

std::vector<float> reduce_scatter_raw(Communicator& comm, const ReduceScatterSpec& spec) {
  check_rs(comm, spec);
  const int p = comm.size();
  const int r = comm.rank();
  const uint64_t mine[1] = {spec.shard_len};
  const auto lens = detail::gather_words(comm, mine, Tag::kCounts);
  for (int q = 0; q < p; ++q) {
    if (lens[q] != spec.shard_len) {
      protocol_error(q, "rank " + std::to_string(q) + " uses shard length " + std::to_string(lens[q]) +
                            ", this rank uses " + std::to_string(spec.shard_len));
    }
  }
  (void)r;
  AlltoAllSpec a2a = shards_to_spec(comm, spec);
  auto& stats = comm.mutable_stats();
  stats.element_count = spec.input.size();
  std::vector<Bf16Buffer> shards(p);
  shards[comm.rank()] = a2a.send[comm.rank()];
  for (int k = 1; k < p; ++k) {
    const int peer = send_peer(comm.rank(), p, k);
    const Bytes b = to_bytes(a2a.send[peer]);
    comm.send(peer, Tag::kPayload, b);
    stats.original_bytes += b.size();
    stats.compressed_bytes += b.size();
  }
  for (int k = 1; k < p; ++k) {
    const int peer = recv_peer(comm.rank(), p, k);
    shards[peer] = from_bytes(comm.recv(peer, Tag::kPayload), spec.shard_len, peer);
  }
  return reduce_shards_f32(shards);
}

}  // namespace

std::vector<float> reduce_shards_f32(std::span<const Bf16Buffer> shards) {
  if (shards.empty()) return {};
  const size_t len = shards[0].size();
  std::vector<float> acc(len);
  for (size_t i = 0; i < len; ++i) acc[i] = shards[0][i].to_float();
  for (size_t r = 1; r < shards.size(); ++r) {
    if (shards[r].size() != len) {
      fail(ErrorCode::kInvalidArgument, "shards differ in length", "shards");
    }
    for (size_t i = 0; i < len; ++i) acc[i] += shards[r][i].to_float();
  }
  return acc;
}

Bf16Buffer round_to_bf16(std::span<const float> values) {
  Bf16Buffer out(values.size());
  for (size_t i = 0; i < values.size(); ++i) out[i] = Bf16::from_float(values[i]);
  return out;
}

Bf16Buffer reference_all_gather(Communicator& comm, std::span<const Bf16> local) {
  Communicator::Scope scope(comm, "ref-allgather");
  const int p = comm.size();
  const int r = comm.rank();
  const uint64_t n = local.size();
  auto& stats = comm.mutable_stats();
  stats.element_count = n;
  Bf16Buffer out(n * p);
  std::copy(local.begin(), local.end(), out.begin() + static_cast<std::ptrdiff_t>(n * r));
  if (p == 1) return out;
  const uint64_t mine[1] = {n};
  const auto counts = detail::gather_words(comm, mine, Tag::kCounts);
  for (int q = 0; q < p; ++q) {
    if (counts[q] != n) {
      protocol_error(q, "rank " + std::to_string(q) + " contributes " + std::to_string(counts[q]) +
                            " elements, this rank " + std::to_string(n));
    }
  }
  const Bytes b = to_bytes(local);
  for (int k = 1; k < p; ++k) {
    comm.send(send_peer(r, p, k), Tag::kPayload, b);
    stats.original_bytes += b.size();
    stats.compressed_bytes += b.size();
  }
  for (int k = 1; k < p; ++k) {
    const int peer = recv_peer(r, p, k);
    const Bf16Buffer chunk = from_bytes(comm.recv(peer, Tag::kPayload), n, peer);
    std::copy(chunk.begin(), chunk.end(), out.begin() + static_cast<std::ptrdiff_t>(n * peer));
  }
  return out;
}

std::vector<Bf16Buffer> reference_all_to_all(Communicator& comm, const AlltoAllSpec& spec) {
  Communicator::Scope scope(comm, "ref-a2a");
  return all_to_all_raw(comm, spec);
}

Bf16Buffer reference_reduce_scatter(Communicator& comm, const ReduceScatterSpec& spec) {
  Communicator::Scope scope(comm, "ref-reducescatter");
  return round_to_bf16(reduce_scatter_raw(comm, spec));
}

std::vector<float> reference_reduce_scatter_f32(Communicator& comm, const ReduceScatterSpec& spec) {
  Communicator::Scope scope(comm, "ref-reducescatter-f32");
  return reduce_scatter_raw(comm, spec);
}

Bf16Buffer zip_all_gather(Communicator& comm, std::span<const Bf16> local, SigmaArg sigma) {
  Communicator::Scope scope(comm, "allgather");
  return all_gather_zip(comm, local, sigma);
}

std::vector<Bf16Buffer> zip_all_to_all_d1(Communicator& comm, const AlltoAllSpec& spec,
                                          SigmaArg sigma) {
  Communicator::Scope scope(comm, "a2a-d1");
  return all_to_all_d1(comm, spec, sigma);
}

std::vector<Bf16Buffer> zip_all_to_all_d2(Communicator& comm, const AlltoAllSpec& spec,
                                          SigmaArg sigma) {
  Communicator::Scope scope(comm, "a2a-d2");
  return all_to_all_d2(comm, spec, sigma);
}

Bf16Buffer zip_reduce_scatter(Communicator& comm, const ReduceScatterSpec& spec, SigmaArg sigma) {
  Communicator::Scope scope(comm, "reducescatter");
  return round_to_bf16(reduce_scatter_zip(comm, spec, sigma));
}

std::vector<float> zip_reduce_scatter_f32(Communicator& comm, const ReduceScatterSpec& spec,
                                          SigmaArg sigma) {
  Communicator::Scope scope(comm, "reducescatter-f32");
  return reduce_scatter_zip(comm, spec, sigma);
}

Bf16Buffer zip_all_reduce(Communicator& comm, std::span<const Bf16> input, SigmaArg sigma) {
  Communicator::Scope scope(comm, "allreduce");
  const auto p = static_cast<uint64_t>(comm.size());
  if (input.size() % p != 0) {
    fail(ErrorCode::kInvalidArgument, "all-reduce input must divide evenly across ranks", "input");
  }
  ReduceScatterSpec spec{Bf16Buffer(input.begin(), input.end()), input.size() / p};
  const Bf16Buffer shard = round_to_bf16(reduce_scatter_zip(comm, spec, sigma));
  const uint64_t original = comm.last_stats().original_bytes;
  const uint64_t compressed = comm.last_stats().compressed_bytes;
  Bf16Buffer out = all_gather_zip(comm, shard, sigma);
  auto& stats = comm.mutable_stats();
  stats.element_count = input.size();
  stats.original_bytes += original;
  stats.compressed_bytes += compressed;
  return out;
}

}  // namespace zipcoll
