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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "zipcoll/transport.h"

namespace zipcoll {

struct TrafficCounters {
  uint64_t bytes_sent = 0;
  uint64_t messages_sent = 0;
  uint64_t bytes_received = 0;
  uint64_t messages_received = 0;
};

// What the last top-level collective did on this rank. Byte counts cover the
// chunks that crossed the transport (the rank's own chunk is not counted).
struct CollectiveStats {
  std::string op;
  uint64_t element_count = 0;     // elements this rank contributed
  uint64_t original_bytes = 0;    // uncompressed size of the chunks sent
  uint64_t compressed_bytes = 0;  // frame bytes actually sent for them
  uint64_t metadata_bytes = 0;    // size/count exchanges
  double start_time = 0.0;        // transport clock
  double end_time = 0.0;

  double elapsed() const { return end_time - start_time; }
  // original / compressed; 1 when nothing was sent.
  double ratio() const;
};

// A rank bound to a transport. One collective at a time: a second concurrent
// one fails with kProtocol. May move between threads between collectives.
class Communicator {
 public:
  explicit Communicator(std::unique_ptr<Transport> transport,
                        std::chrono::milliseconds timeout = kDefaultTimeout);

  int rank() const { return rank_; }
  int size() const { return size_; }

  void send(int peer, Tag tag, std::span<const uint8_t> payload);
  Bytes recv(int peer, Tag tag);

  double now() const { return transport_->now(); }
  bool has_virtual_clock() const { return transport_->has_virtual_clock(); }

  std::chrono::milliseconds timeout() const { return timeout_; }
  void set_timeout(std::chrono::milliseconds t) { timeout_ = t; }

  const TrafficCounters& counters() const { return counters_; }
  void reset_counters() { counters_ = {}; }

  const CollectiveStats& last_stats() const { return stats_; }
  CollectiveStats& mutable_stats() { return stats_; }

  Transport& transport() { return *transport_; }

  // Guards one top-level collective: rejects nesting, brackets the transport
  // epoch and stamps start/end times into last_stats().
  class Scope {
   public:
    Scope(Communicator& comm, std::string op);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Communicator& comm_;
  };

 private:
  std::unique_ptr<Transport> transport_;
  int rank_;
  int size_;
  std::chrono::milliseconds timeout_;
  TrafficCounters counters_;
  CollectiveStats stats_;
  std::atomic<bool> in_flight_{false};
};

// Fixed-size all-to-all of u64s: local_sizes[q] goes to rank q; the result's
// entry q is what rank q declared for this rank.
std::vector<uint64_t> exchange_sizes(Communicator& comm, std::span<const uint64_t> local_sizes);

// Every rank gets every rank's value (index = rank).
std::vector<uint64_t> all_gather_u64(Communicator& comm, uint64_t value);
std::vector<double> all_gather_f64(Communicator& comm, double value);

void barrier(Communicator& comm);

namespace detail {

// Unscoped building blocks for use inside a collective. `per_peer` words go
// to each peer; the result holds per_peer words from each peer, rank-major.
std::vector<uint64_t> exchange_words(Communicator& comm, std::span<const uint64_t> words,
                                     size_t per_peer, Tag tag);
std::vector<uint64_t> gather_words(Communicator& comm, std::span<const uint64_t> words, Tag tag);

// Peer order used by every collective: sends go to rank + k, receives come
// from rank - k, for k = 1 .. size - 1.
inline int send_peer(int rank, int size, int k) { return (rank + k) % size; }
inline int recv_peer(int rank, int size, int k) { return (rank - k + size) % size; }

}  // namespace detail

}  // namespace zipcoll
