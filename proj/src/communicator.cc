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

#include "zipcoll/communicator.h"

#include <algorithm>
#include <bit>
#include <utility>

#include "zipcoll/error.h"

namespace zipcoll {

double CollectiveStats::ratio() const {
  if (compressed_bytes == 0) return 1.0;
  return static_cast<double>(original_bytes) / static_cast<double>(compressed_bytes);
}

Communicator::Communicator(std::unique_ptr<Transport> transport, std::chrono::milliseconds timeout)
    : transport_(std::move(transport)), timeout_(timeout) {
  if (!transport_) fail(ErrorCode::kInvalidArgument, "null transport", "transport");
  rank_ = transport_->rank();
  size_ = transport_->world_size();
}

void Communicator::send(int peer, Tag tag, std::span<const uint8_t> payload) {
  transport_->send(peer, tag, payload);
  counters_.bytes_sent += payload.size();
  ++counters_.messages_sent;
}

Bytes Communicator::recv(int peer, Tag tag) {
  Bytes b = transport_->recv(peer, tag, timeout_);
  counters_.bytes_received += b.size();
  ++counters_.messages_received;
  return b;
}

Communicator::Scope::Scope(Communicator& comm, std::string op) : comm_(comm) {
  if (comm_.in_flight_.exchange(true)) {
    fail(ErrorCode::kProtocol, "another collective is already in flight on this communicator");
  }
  try {
    comm_.transport_->begin_collective();
  } catch (...) {
    comm_.in_flight_ = false;
    throw;
  }
  comm_.stats_ = {};
  comm_.stats_.op = std::move(op);
  comm_.stats_.start_time = comm_.now();
}

Communicator::Scope::~Scope() {
  comm_.stats_.end_time = comm_.now();
  comm_.transport_->end_collective();
  comm_.in_flight_ = false;
}

namespace {

Bytes encode_words(std::span<const uint64_t> words) {
  Bytes b(8 * words.size());
  for (size_t i = 0; i < words.size(); ++i) {
    for (int k = 0; k < 8; ++k) b[8 * i + k] = static_cast<uint8_t>(words[i] >> (8 * k));
  }
  return b;
}

void decode_words(const Bytes& b, size_t count, int peer, uint64_t* out) {
  if (b.size() != 8 * count) {
    fail(ErrorCode::kProtocol,
         "expected " + std::to_string(8 * count) + " metadata bytes, got " + std::to_string(b.size()),
         "peer " + std::to_string(peer));
  }
  for (size_t i = 0; i < count; ++i) {
    uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<uint64_t>(b[8 * i + k]) << (8 * k);
    out[i] = v;
  }
}

}  // namespace

namespace detail {

std::vector<uint64_t> exchange_words(Communicator& comm, std::span<const uint64_t> words,
                                     size_t per_peer, Tag tag) {
  const int p = comm.size();
  const int r = comm.rank();
  if (words.size() != per_peer * static_cast<size_t>(p)) {
    fail(ErrorCode::kInvalidArgument, "need " + std::to_string(per_peer) + " words per rank",
         "local_sizes");
  }
  std::vector<uint64_t> out(words.size());
  std::copy_n(words.begin() + per_peer * r, per_peer, out.begin() + per_peer * r);
  for (int k = 1; k < p; ++k) {
    const int peer = send_peer(r, p, k);
    const Bytes b = encode_words(words.subspan(per_peer * peer, per_peer));
    comm.send(peer, tag, b);
    comm.mutable_stats().metadata_bytes += b.size();
  }
  for (int k = 1; k < p; ++k) {
    const int peer = recv_peer(r, p, k);
    decode_words(comm.recv(peer, tag), per_peer, peer, out.data() + per_peer * peer);
  }
  return out;
}

std::vector<uint64_t> gather_words(Communicator& comm, std::span<const uint64_t> words, Tag tag) {
  const int p = comm.size();
  const int r = comm.rank();
  std::vector<uint64_t> out(words.size() * p);
  std::copy(words.begin(), words.end(), out.begin() + words.size() * r);
  const Bytes b = encode_words(words);
  for (int k = 1; k < p; ++k) {
    comm.send(send_peer(r, p, k), tag, b);
    comm.mutable_stats().metadata_bytes += b.size();
  }
  for (int k = 1; k < p; ++k) {
    const int peer = recv_peer(r, p, k);
    decode_words(comm.recv(peer, tag), words.size(), peer, out.data() + words.size() * peer);
  }
  return out;
}

}  // namespace detail

std::vector<uint64_t> exchange_sizes(Communicator& comm, std::span<const uint64_t> local_sizes) {
  Communicator::Scope scope(comm, "exchange_sizes");
  return detail::exchange_words(comm, local_sizes, 1, Tag::kSizes);
}

std::vector<uint64_t> all_gather_u64(Communicator& comm, uint64_t value) {
  Communicator::Scope scope(comm, "all_gather_u64");
  const uint64_t word[1] = {value};
  return detail::gather_words(comm, word, Tag::kGather);
}

std::vector<double> all_gather_f64(Communicator& comm, double value) {
  Communicator::Scope scope(comm, "all_gather_f64");
  const uint64_t word[1] = {std::bit_cast<uint64_t>(value)};
  const auto words = detail::gather_words(comm, word, Tag::kGather);
  std::vector<double> out(words.size());
  for (size_t i = 0; i < words.size(); ++i) out[i] = std::bit_cast<double>(words[i]);
  return out;
}

void barrier(Communicator& comm) {
  Communicator::Scope scope(comm, "barrier");
  const int p = comm.size();
  const int r = comm.rank();
  for (int k = 1; k < p; ++k) comm.send(detail::send_peer(r, p, k), Tag::kBarrier, {});
  for (int k = 1; k < p; ++k) comm.recv(detail::recv_peer(r, p, k), Tag::kBarrier);
}

}  // namespace zipcoll
