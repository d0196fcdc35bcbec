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
#include <optional>
#include <string>
#include <string_view>

#include "zipcoll/transport.h"

// TCP transport, one process per rank.
//
// Wire format of every message: a 16-byte little-endian header
//   u64 payload length | u32 tag | u32 source rank
// followed by the payload.
//
// Rendezvous: rank 0 listens on the rendezvous address. Every other rank opens
// its own listener, connects to rank 0 and sends a kHello message carrying
// (u32 world size, u32 listener port). Rank 0 replies to each with the table
// of (u32 IPv4 address in network byte order, u32 port) for all ranks. Rank r
// then connects to every rank in [1, r) with a kHello (world size, 0) and
// accepts connections from every rank above it. Collectives start only once
// the full mesh is up.
namespace zipcoll {

inline constexpr char kRendezvousEnv[] = "ZIPCOLL_RENDEZVOUS";

struct TcpOptions {
  std::string host = "127.0.0.1";
  uint16_t port = 29500;
  // Bound on the whole rendezvous, including waiting for rank 0 to appear.
  std::chrono::milliseconds connect_timeout = kDefaultTimeout;
};

// "host:port". Throws kFormat.
TcpOptions parse_rendezvous(std::string_view spec);

// Reads ZIPCOLL_RENDEZVOUS if it is set.
std::optional<TcpOptions> rendezvous_from_env();

std::unique_ptr<Transport> connect_tcp(int rank, int world_size, const TcpOptions& options);

}  // namespace zipcoll
