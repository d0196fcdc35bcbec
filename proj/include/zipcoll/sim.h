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

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "zipcoll/transport.h"

namespace zipcoll {

enum class LinkConcurrency {
  // Every (src, dst) link is an independent pipe.
  kFullP2P,
  // All transfers share one medium and are served one at a time.
  kSerialized,
};

// Network model for the virtual-clock transport.
//
// A message of b bytes on link (s, d) occupies its resource for
// b / bandwidth(s, d) seconds starting no earlier than the sender's clock, and
// arrives `latency(s, d)` after it leaves the resource. The receiver's clock
// advances to the arrival time when it consumes the message. At the start of
// each collective every rank's clock restarts at its ready time.
struct SimProfile {
  double bandwidth = 1e9;  // bytes / s
  double latency = 1e-5;   // s
  LinkConcurrency mode = LinkConcurrency::kFullP2P;
  std::map<std::pair<int, int>, double> link_bandwidth;
  std::map<std::pair<int, int>, double> link_latency;
  std::map<int, double> ready_time;

  double bandwidth_of(int src, int dst) const;
  double latency_of(int src, int dst) const;
  double ready_of(int rank) const;

  // Throws kInvalidArgument if any bandwidth <= 0, latency < 0 or ready < 0.
  void check() const;
};

// Line-oriented key=value text; '#' starts a comment. Keys:
//   mode = full-p2p | serialized
//   bandwidth = <bytes/s>          latency = <s>
//   ready.<rank> = <s>
//   link.<src>.<dst>.bandwidth = <bytes/s>
//   link.<src>.<dst>.latency = <s>
SimProfile parse_sim_profile(std::string_view text);
SimProfile load_sim_profile(const std::string& path);
std::string to_text(const SimProfile& profile);

// Rank endpoints sharing one virtual clock model. Endpoints may be driven
// from separate threads; serialized-mode scheduling is deterministic
// regardless of thread interleaving.
TransportGroup make_sim_group(int world_size, const SimProfile& profile);

}  // namespace zipcoll
