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

#include <memory>
#include <string>

#include "message_queue.h"
#include "zipcoll/error.h"
#include "zipcoll/transport.h"

namespace zipcoll {

double Transport::now() const {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

namespace {

struct LoopbackFabric {
  explicit LoopbackFabric(int n) : world(n), inbox(static_cast<size_t>(n) * n) {}

  // Queue holding messages src -> dst.
  detail::MessageQueue& queue(int src, int dst) { return inbox[static_cast<size_t>(dst) * world + src]; }

  int world;
  std::vector<detail::MessageQueue> inbox;
};

class LoopbackTransport final : public Transport {
 public:
  LoopbackTransport(std::shared_ptr<LoopbackFabric> fabric, int rank)
      : fabric_(std::move(fabric)), rank_(rank) {}

  ~LoopbackTransport() override {
    for (int dst = 0; dst < fabric_->world; ++dst) {
      fabric_->queue(rank_, dst).close("rank " + std::to_string(rank_) + " disconnected");
    }
  }

  int rank() const override { return rank_; }
  int world_size() const override { return fabric_->world; }

  void send(int peer, Tag tag, std::span<const uint8_t> payload) override {
    check_peer(peer);
    fabric_->queue(rank_, peer).push({tag, Bytes(payload.begin(), payload.end())});
  }

  Bytes recv(int peer, Tag tag, std::chrono::milliseconds timeout) override {
    check_peer(peer);
    return detail::take_payload(fabric_->queue(peer, rank_).pop(timeout, peer), tag, peer);
  }

 private:
  void check_peer(int peer) const {
    if (peer < 0 || peer >= fabric_->world) {
      fail(ErrorCode::kInvalidArgument, "peer " + std::to_string(peer) + " out of range", "peer");
    }
  }

  std::shared_ptr<LoopbackFabric> fabric_;
  int rank_;
};

}  // namespace

TransportGroup make_loopback_group(int world_size) {
  if (world_size < 1) {
    fail(ErrorCode::kInvalidArgument, "world size must be at least 1", "world_size");
  }
  auto fabric = std::make_shared<LoopbackFabric>(world_size);
  TransportGroup group;
  for (int r = 0; r < world_size; ++r) {
    group.push_back(std::make_unique<LoopbackTransport>(fabric, r));
  }
  return group;
}

}  // namespace zipcoll
