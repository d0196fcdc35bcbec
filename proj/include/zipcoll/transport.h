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

#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace zipcoll {

using Bytes = std::vector<uint8_t>;

inline constexpr std::chrono::milliseconds kDefaultTimeout{30000};

// Message tags. They only guard against protocol desynchronisation: delivery
// is FIFO per (src, dst) pair and a recv whose head message carries a
// different tag fails with kProtocol.
enum class Tag : uint32_t {
  kHello = 1,
  kSizes = 2,
  kPayload = 3,
  kStatic = 4,
  kDynamicSizes = 5,
  kDynamic = 6,
  kCounts = 7,
  kBarrier = 8,
  kGather = 9,
  kUser = 100,
};

// Point-to-point, reliable, per-pair FIFO message transport for one rank.
// send() is buffered: it never waits for the peer to post a receive.
class Transport {
 public:
  virtual ~Transport() = default;

  virtual int rank() const = 0;
  virtual int world_size() const = 0;

  virtual void send(int peer, Tag tag, std::span<const uint8_t> payload) = 0;
  // Blocks until the next message from `peer` arrives. Throws kTimeout after
  // `timeout`, kTransport if the peer is gone, kProtocol on a tag mismatch.
  virtual Bytes recv(int peer, Tag tag, std::chrono::milliseconds timeout) = 0;

  // Seconds since an arbitrary origin. Simulated transports return virtual time.
  virtual double now() const;
  virtual bool has_virtual_clock() const { return false; }

  // Bracket every top-level collective. The simulator uses them to restart
  // its clocks at each rank's ready time; other transports ignore them.
  virtual void begin_collective() {}
  virtual void end_collective() {}
};

using TransportGroup = std::vector<std::unique_ptr<Transport>>;

// All ranks in one process, connected through in-memory queues.
TransportGroup make_loopback_group(int world_size);

}  // namespace zipcoll
