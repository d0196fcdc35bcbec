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

#include "zipcoll/sim.h"

#include <algorithm>
#include <charconv>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <mutex>
#include <sstream>
#include <tuple>

#include "message_queue.h"
#include "kv_text.h"
#include "zipcoll/error.h"

namespace zipcoll {

double SimProfile::bandwidth_of(int src, int dst) const {
  auto it = link_bandwidth.find({src, dst});
  return it == link_bandwidth.end() ? bandwidth : it->second;
}

double SimProfile::latency_of(int src, int dst) const {
  auto it = link_latency.find({src, dst});
  return it == link_latency.end() ? latency : it->second;
}

double SimProfile::ready_of(int rank) const {
  auto it = ready_time.find(rank);
  return it == ready_time.end() ? 0.0 : it->second;
}

void SimProfile::check() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::kInvalidArgument, what, "sim-profile"); };
  if (!(bandwidth > 0.0)) bad("bandwidth must be positive");
  if (!(latency >= 0.0)) bad("latency must be non-negative");
  for (const auto& [link, bw] : link_bandwidth) {
    if (!(bw > 0.0)) bad("link bandwidth must be positive");
  }
  for (const auto& [link, lat] : link_latency) {
    if (!(lat >= 0.0)) bad("link latency must be non-negative");
  }
  for (const auto& [rank, t] : ready_time) {
    if (!(t >= 0.0)) bad("ready time must be non-negative");
  }
}

namespace {

using detail::fmt_double;
using detail::to_double;
using detail::trim;

int to_int(std::string_view v, std::string_view key) {
  int out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || out < 0) {
    fail(ErrorCode::kFormat, "bad rank '" + std::string(v) + "'", std::string(key));
  }
  return out;
}

std::vector<std::string_view> split_dots(std::string_view key) {
  std::vector<std::string_view> parts;
  size_t start = 0;
  for (size_t i = 0; i <= key.size(); ++i) {
    if (i == key.size() || key[i] == '.') {
      parts.push_back(key.substr(start, i - start));
      start = i + 1;
    }
  }
  return parts;
}

}  // namespace

SimProfile parse_sim_profile(std::string_view text) {
  SimProfile p;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::kFormat, "expected key=value, got '" + std::string(line) + "'", "sim-profile");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto parts = split_dots(key);
    if (key == "mode") {
      if (value == "full-p2p") {
        p.mode = LinkConcurrency::kFullP2P;
      } else if (value == "serialized" || value == "serialized-links") {
        p.mode = LinkConcurrency::kSerialized;
      } else {
        fail(ErrorCode::kFormat, "unknown mode '" + std::string(value) + "'", "mode");
      }
    } else if (key == "bandwidth") {
      p.bandwidth = to_double(value, key);
    } else if (key == "latency") {
      p.latency = to_double(value, key);
    } else if (parts.size() == 2 && parts[0] == "ready") {
      p.ready_time[to_int(parts[1], key)] = to_double(value, key);
    } else if (parts.size() == 4 && parts[0] == "link") {
      const std::pair<int, int> link{to_int(parts[1], key), to_int(parts[2], key)};
      if (parts[3] == "bandwidth") {
        p.link_bandwidth[link] = to_double(value, key);
      } else if (parts[3] == "latency") {
        p.link_latency[link] = to_double(value, key);
      } else {
        fail(ErrorCode::kFormat, "unknown link property", std::string(key));
      }
    } else {
      fail(ErrorCode::kFormat, "unknown key", std::string(key));
    }
  }
  p.check();
  return p;
}

SimProfile load_sim_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kFormat, "cannot open " + path, "sim-profile");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_sim_profile(ss.str());
}

std::string to_text(const SimProfile& p) {
  std::string out;
  out += "mode=";
  out += p.mode == LinkConcurrency::kFullP2P ? "full-p2p" : "serialized";
  out += "\nbandwidth=" + fmt_double(p.bandwidth);
  out += "\nlatency=" + fmt_double(p.latency) + "\n";
  for (const auto& [rank, t] : p.ready_time) {
    out += "ready." + std::to_string(rank) + "=" + fmt_double(t) + "\n";
  }
  for (const auto& [link, bw] : p.link_bandwidth) {
    out += "link." + std::to_string(link.first) + "." + std::to_string(link.second) +
           ".bandwidth=" + fmt_double(bw) + "\n";
  }
  for (const auto& [link, lat] : p.link_latency) {
    out += "link." + std::to_string(link.first) + "." + std::to_string(link.second) +
           ".latency=" + fmt_double(lat) + "\n";
  }
  return out;
}

namespace {

enum class RankState { kRunning, kBlocked, kIdle, kClosed };

struct TimedMessage {
  detail::Message msg;
  double arrival = 0.0;
};

struct PendingKey {
  double ready;
  int src;
  int dst;
  uint64_t seq;
  friend bool operator<(const PendingKey& a, const PendingKey& b) {
    return std::tie(a.ready, a.src, a.dst, a.seq) < std::tie(b.ready, b.src, b.dst, b.seq);
  }
};

// Shared state of one simulated group; every field is guarded by mu.
//
// Serialized mode is a conservative discrete-event schedule: a pending
// transfer is placed on the shared medium only once no running rank could
// still issue a transfer that orders before it. A rank blocked in recv, idle
// between collectives or closed cannot, so the committed order is a pure
// function of the program, not of thread timing.
class SimFabric {
 public:
  SimFabric(int world, SimProfile profile)
      : world_(world),
        profile_(std::move(profile)),
        clock_(world),
        state_(world, RankState::kRunning),
        inbox_(static_cast<size_t>(world) * world),
        pending_count_(static_cast<size_t>(world) * world, 0),
        link_free_(static_cast<size_t>(world) * world, 0.0) {
    for (int r = 0; r < world_; ++r) clock_[r] = profile_.ready_of(r);
  }

  int world() const { return world_; }

  void send(int src, int dst, Tag tag, std::span<const uint8_t> payload) {
    std::unique_lock lock(mu_);
    detail::Message m{tag, Bytes(payload.begin(), payload.end())};
    const double bytes = static_cast<double>(payload.size());
    if (src == dst) {
      inbox(src, dst).push_back({std::move(m), clock_[src]});
    } else if (profile_.mode == LinkConcurrency::kFullP2P) {
      double& free = link_free_[idx(src, dst)];
      const double start = std::max(clock_[src], free);
      const double done = start + bytes / profile_.bandwidth_of(src, dst);
      free = done;
      inbox(src, dst).push_back({std::move(m), done + profile_.latency_of(src, dst)});
    } else {
      pending_.emplace(PendingKey{clock_[src], src, dst, seq_++}, std::move(m));
      ++pending_count_[idx(src, dst)];
      commit();
    }
    cv_.notify_all();
  }

  Bytes recv(int self, int peer, Tag tag, std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    set_state(self, RankState::kBlocked);
    auto& q = inbox(peer, self);
    const bool ok = cv_.wait_for(lock, timeout, [&] {
      return !q.empty() ||
             (state_[peer] == RankState::kClosed && pending_count_[idx(peer, self)] == 0);
    });
    set_state(self, RankState::kRunning);
    if (!ok) {
      fail(ErrorCode::kTimeout, "no message from rank " + std::to_string(peer) + " within " +
                                    std::to_string(timeout.count()) + " ms",
           "peer " + std::to_string(peer));
    }
    if (q.empty()) {
      fail(ErrorCode::kTransport, "rank " + std::to_string(peer) + " disconnected",
           "peer " + std::to_string(peer));
    }
    TimedMessage tm = std::move(q.front());
    q.pop_front();
    clock_[self] = std::max(clock_[self], tm.arrival);
    return detail::take_payload(std::move(tm.msg), tag, peer);
  }

  double now(int self) const {
    std::lock_guard lock(mu_);
    return clock_[self];
  }

  void begin_collective(int self, std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    set_state(self, RankState::kIdle);
    check_no_closed_peer();
    const uint64_t gen = generation_;
    if (++arrived_ == world_) {
      arrived_ = 0;
      ++generation_;
      std::fill(link_free_.begin(), link_free_.end(), 0.0);
      medium_free_ = 0.0;
      for (int r = 0; r < world_; ++r) {
        clock_[r] = profile_.ready_of(r);
        if (state_[r] != RankState::kClosed) state_[r] = RankState::kRunning;
      }
      cv_.notify_all();
      return;
    }
    const bool ok = cv_.wait_for(lock, timeout, [&] { return generation_ != gen || closed_ > 0; });
    if (generation_ != gen) return;
    --arrived_;
    set_state(self, RankState::kRunning);
    if (!ok) fail(ErrorCode::kTimeout, "not all ranks entered the collective", "barrier");
    check_no_closed_peer();
  }

  void end_collective(int self) {
    std::lock_guard lock(mu_);
    set_state(self, RankState::kIdle);
  }

  void close(int self) {
    std::lock_guard lock(mu_);
    if (state_[self] != RankState::kClosed) ++closed_;
    set_state(self, RankState::kClosed);
  }

 private:
  size_t idx(int src, int dst) const { return static_cast<size_t>(src) * world_ + dst; }
  std::deque<TimedMessage>& inbox(int src, int dst) { return inbox_[idx(src, dst)]; }

  void set_state(int r, RankState s) {
    if (state_[r] == RankState::kClosed) return;
    state_[r] = s;
    commit();
    cv_.notify_all();
  }

  // A collective can never complete once any member is gone.
  void check_no_closed_peer() const {
    for (int r = 0; r < world_; ++r) {
      if (state_[r] == RankState::kClosed) {
        fail(ErrorCode::kTransport, "rank " + std::to_string(r) + " disconnected",
             "peer " + std::to_string(r));
      }
    }
  }

  bool may_commit(const PendingKey& k) const {
    for (int r = 0; r < world_; ++r) {
      if (state_[r] != RankState::kRunning) continue;
      if (!(clock_[r] > k.ready || (clock_[r] == k.ready && r > k.src))) return false;
    }
    return true;
  }

  void commit() {
    if (profile_.mode != LinkConcurrency::kSerialized) return;
    while (!pending_.empty()) {
      auto it = pending_.begin();
      const PendingKey& k = it->first;
      if (!may_commit(k)) return;
      const double start = std::max(k.ready, medium_free_);
      const double done =
          start + static_cast<double>(it->second.payload.size()) / profile_.bandwidth_of(k.src, k.dst);
      medium_free_ = done;
      inbox(k.src, k.dst).push_back({std::move(it->second), done + profile_.latency_of(k.src, k.dst)});
      --pending_count_[idx(k.src, k.dst)];
      pending_.erase(it);
    }
  }

  const int world_;
  const SimProfile profile_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<double> clock_;
  std::vector<RankState> state_;
  std::vector<std::deque<TimedMessage>> inbox_;
  std::map<PendingKey, detail::Message> pending_;
  std::vector<uint64_t> pending_count_;
  std::vector<double> link_free_;
  double medium_free_ = 0.0;
  uint64_t seq_ = 0;
  int arrived_ = 0;
  int closed_ = 0;
  uint64_t generation_ = 0;
};

class SimTransport final : public Transport {
 public:
  SimTransport(std::shared_ptr<SimFabric> fabric, int rank) : fabric_(std::move(fabric)), rank_(rank) {}
  ~SimTransport() override { fabric_->close(rank_); }

  int rank() const override { return rank_; }
  int world_size() const override { return fabric_->world(); }

  void send(int peer, Tag tag, std::span<const uint8_t> payload) override {
    check_peer(peer);
    fabric_->send(rank_, peer, tag, payload);
  }

  Bytes recv(int peer, Tag tag, std::chrono::milliseconds timeout) override {
    check_peer(peer);
    return fabric_->recv(rank_, peer, tag, timeout);
  }

  double now() const override { return fabric_->now(rank_); }
  bool has_virtual_clock() const override { return true; }
  void begin_collective() override { fabric_->begin_collective(rank_, kDefaultTimeout); }
  void end_collective() override { fabric_->end_collective(rank_); }

 private:
  void check_peer(int peer) const {
    if (peer < 0 || peer >= fabric_->world()) {
      fail(ErrorCode::kInvalidArgument, "peer " + std::to_string(peer) + " out of range", "peer");
    }
  }

  std::shared_ptr<SimFabric> fabric_;
  int rank_;
};

}  // namespace

TransportGroup make_sim_group(int world_size, const SimProfile& profile) {
  if (world_size < 1) {
    fail(ErrorCode::kInvalidArgument, "world size must be at least 1", "world_size");
  }
  profile.check();
  auto fabric = std::make_shared<SimFabric>(world_size, profile);
  TransportGroup group;
  for (int r = 0; r < world_size; ++r) {
    group.push_back(std::make_unique<SimTransport>(fabric, r));
  }
  return group;
}

}  // namespace zipcoll
