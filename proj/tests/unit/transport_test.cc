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

#include <gtest/gtest.h>

#include <thread>

#include "test_support.h"
#include "zipcoll/bench.h"
#include "zipcoll/communicator.h"
#include "zipcoll/error.h"
#include "zipcoll/sim.h"
#include "zipcoll/tcp.h"

namespace zipcoll {
namespace {

using namespace std::chrono_literals;

Bytes bytes_of(size_t n, uint8_t fill) { return Bytes(n, fill); }

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

// ---- loopback ----------------------------------------------------------------

TEST(Loopback, DeliversInOrderPerPair) {
  auto g = make_loopback_group(2);
  g[0]->send(1, Tag::kUser, bytes_of(3, 1));
  g[0]->send(1, Tag::kUser, bytes_of(5, 2));
  g[1]->send(0, Tag::kPayload, bytes_of(0, 0));
  EXPECT_EQ(g[1]->recv(0, Tag::kUser, 1s), bytes_of(3, 1));
  EXPECT_EQ(g[1]->recv(0, Tag::kUser, 1s), bytes_of(5, 2));
  EXPECT_EQ(g[0]->recv(1, Tag::kPayload, 1s), Bytes{});
  EXPECT_FALSE(g[0]->has_virtual_clock());
}

TEST(Loopback, SelfSendWorks) {
  auto g = make_loopback_group(1);
  g[0]->send(0, Tag::kUser, bytes_of(2, 7));
  EXPECT_EQ(g[0]->recv(0, Tag::kUser, 1s), bytes_of(2, 7));
}

TEST(Loopback, TagMismatchIsAProtocolError) {
  auto g = make_loopback_group(2);
  g[0]->send(1, Tag::kStatic, bytes_of(1, 0));
  EXPECT_EQ(code_of([&] { g[1]->recv(0, Tag::kDynamic, 1s); }), ErrorCode::kProtocol);
}

TEST(Loopback, TimeoutAndDisconnect) {
  auto g = make_loopback_group(2);
  EXPECT_EQ(code_of([&] { g[1]->recv(0, Tag::kUser, 20ms); }), ErrorCode::kTimeout);
  g[0]->send(1, Tag::kUser, bytes_of(1, 9));
  g[0].reset();
  // Messages sent before the peer left are still delivered.
  EXPECT_EQ(g[1]->recv(0, Tag::kUser, 1s), bytes_of(1, 9));
  EXPECT_EQ(code_of([&] { g[1]->recv(0, Tag::kUser, 1s); }), ErrorCode::kTransport);
}

TEST(Loopback, BadPeer) {
  auto g = make_loopback_group(2);
  EXPECT_EQ(code_of([&] { g[0]->send(2, Tag::kUser, {}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { g[0]->recv(-1, Tag::kUser, 1s); }), ErrorCode::kInvalidArgument);
}

// ---- communicator helpers ------------------------------------------------------

TEST(Communicator, ExchangeSizesIsATranspose) {
  for (int p : {1, 2, 3, 5}) {
    // Rank r declares 100 * r + q for peer q; rank q must see 100 * r + q from r.
    run_ranks(make_loopback_group(p), [p](Communicator& comm) {
      std::vector<uint64_t> mine(p);
      for (int q = 0; q < p; ++q) mine[q] = 100 * comm.rank() + q;
      const auto got = exchange_sizes(comm, mine);
      for (int r = 0; r < p; ++r) {
        if (got[r] != static_cast<uint64_t>(100 * r + comm.rank())) {
          fail(ErrorCode::kProtocol, "transpose mismatch");
        }
      }
      const auto all = all_gather_u64(comm, comm.rank() * 3);
      for (int r = 0; r < p; ++r) {
        if (all[r] != static_cast<uint64_t>(r * 3)) fail(ErrorCode::kProtocol, "gather mismatch");
      }
      barrier(comm);
    });
  }
}

TEST(Communicator, CountsTrafficAndRejectsNesting) {
  auto g = make_loopback_group(1);
  Communicator comm(std::move(g[0]));
  Communicator::Scope outer(comm, "outer");
  EXPECT_EQ(code_of([&] { Communicator::Scope inner(comm, "inner"); }), ErrorCode::kProtocol);
  comm.send(0, Tag::kUser, bytes_of(10, 0));
  comm.recv(0, Tag::kUser);
  EXPECT_EQ(comm.counters().bytes_sent, 10u);
  EXPECT_EQ(comm.counters().messages_received, 1u);
}

TEST(Communicator, WrongSizeVector) {
  run_ranks(make_loopback_group(1), [](Communicator& comm) {
    const std::vector<uint64_t> two{1, 2};
    EXPECT_EQ(code_of([&] { exchange_sizes(comm, two); }), ErrorCode::kInvalidArgument);
  });
}

TEST(RunRanks, ReportsTheRootCause) {
  try {
    run_ranks(make_loopback_group(3), [](Communicator& comm) {
      if (comm.rank() == 2) fail(ErrorCode::kFormat, "rank 2 gave up");
      all_gather_u64(comm, 1);
    });
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
  }
}

// ---- simulator -------------------------------------------------------------------

SimProfile profile(LinkConcurrency mode, double bw = 1e9, double lat = 1e-5) {
  SimProfile p;
  p.mode = mode;
  p.bandwidth = bw;
  p.latency = lat;
  return p;
}

TEST(Sim, SingleMessageTime) {
  auto g = make_sim_group(2, profile(LinkConcurrency::kFullP2P, 1e6, 1e-3));
  std::thread t([&] { g[0]->send(1, Tag::kUser, bytes_of(1000, 0)); });
  g[1]->recv(0, Tag::kUser, 1s);
  t.join();
  EXPECT_DOUBLE_EQ(g[1]->now(), 1000 / 1e6 + 1e-3);
  EXPECT_DOUBLE_EQ(g[0]->now(), 0.0);  // sends are buffered
  EXPECT_TRUE(g[0]->has_virtual_clock());
}

TEST(Sim, BackToBackMessagesShareTheLink) {
  auto g = make_sim_group(2, profile(LinkConcurrency::kFullP2P, 1e6, 1e-3));
  g[0]->send(1, Tag::kUser, bytes_of(1000, 0));
  g[0]->send(1, Tag::kUser, bytes_of(500, 0));
  g[1]->recv(0, Tag::kUser, 1s);
  EXPECT_DOUBLE_EQ(g[1]->now(), 1e-3 + 1e-3);
  g[1]->recv(0, Tag::kUser, 1s);
  EXPECT_DOUBLE_EQ(g[1]->now(), 1.5e-3 + 1e-3);
}

// Four ranks: 0 -> 1 and 2 -> 3 simultaneously, b bytes each.
std::vector<double> two_pairs(LinkConcurrency mode, double b) {
  auto g = make_sim_group(4, profile(mode, 1e6, 1e-3));
  std::vector<double> done(4);
  std::vector<std::thread> ts;
  for (int r = 0; r < 4; ++r) {
    ts.emplace_back([&, r] {
      g[r]->begin_collective();
      if (r % 2 == 0) {
        g[r]->send(r + 1, Tag::kUser, bytes_of(static_cast<size_t>(b), 0));
      } else {
        g[r]->recv(r - 1, Tag::kUser, 5s);
      }
      done[r] = g[r]->now();
      g[r]->end_collective();
    });
  }
  for (auto& t : ts) t.join();
  return done;
}

TEST(Sim, FullP2PLinksAreIndependent) {
  const auto d = two_pairs(LinkConcurrency::kFullP2P, 1000);
  EXPECT_DOUBLE_EQ(d[1], 2e-3);
  EXPECT_DOUBLE_EQ(d[3], 2e-3);
}

TEST(Sim, SerializedMediumQueuesTransfers) {
  for (int rep = 0; rep < 20; ++rep) {
    const auto d = two_pairs(LinkConcurrency::kSerialized, 1000);
    // Ties on ready time go to the lower source rank.
    EXPECT_DOUBLE_EQ(d[1], 2e-3);
    EXPECT_DOUBLE_EQ(d[3], 3e-3);
  }
}

TEST(Sim, ReadyTimesDelayTheSender) {
  SimProfile p = profile(LinkConcurrency::kFullP2P, 1e6, 0.0);
  p.ready_time[0] = 0.5;
  auto g = make_sim_group(2, p);
  std::thread t([&] {
    g[0]->begin_collective();
    g[0]->send(1, Tag::kUser, bytes_of(1000, 0));
    g[0]->end_collective();
  });
  g[1]->begin_collective();
  g[1]->recv(0, Tag::kUser, 1s);
  g[1]->end_collective();
  t.join();
  EXPECT_DOUBLE_EQ(g[1]->now(), 0.501);
}

TEST(Sim, PerLinkOverrides) {
  SimProfile p = profile(LinkConcurrency::kFullP2P, 1e6, 0.0);
  p.link_bandwidth[{0, 1}] = 1e3;
  p.link_latency[{0, 1}] = 2.0;
  EXPECT_DOUBLE_EQ(p.bandwidth_of(0, 1), 1e3);
  EXPECT_DOUBLE_EQ(p.bandwidth_of(1, 0), 1e6);
  auto g = make_sim_group(2, p);
  g[0]->send(1, Tag::kUser, bytes_of(1000, 0));
  g[1]->recv(0, Tag::kUser, 1s);
  EXPECT_DOUBLE_EQ(g[1]->now(), 3.0);
}

TEST(Sim, ClosedPeerFailsTheBarrierQuickly) {
  auto g = make_sim_group(2, SimProfile{});
  g[1].reset();
  const auto start = std::chrono::steady_clock::now();
  EXPECT_EQ(code_of([&] { g[0]->begin_collective(); }), ErrorCode::kTransport);
  EXPECT_LT(std::chrono::steady_clock::now() - start, 5s);
  EXPECT_EQ(code_of([&] { g[0]->recv(1, Tag::kUser, 1s); }), ErrorCode::kTransport);
}

TEST(SimProfile, TextRoundTrip) {
  const std::string text =
      "# comment\nmode = serialized\nbandwidth=2.5e9\nlatency=3e-6\nready.2=0.25\n"
      "link.0.1.bandwidth=1e8\nlink.1.0.latency=1e-4\n";
  const SimProfile p = parse_sim_profile(text);
  EXPECT_EQ(p.mode, LinkConcurrency::kSerialized);
  EXPECT_DOUBLE_EQ(p.bandwidth, 2.5e9);
  EXPECT_DOUBLE_EQ(p.ready_of(2), 0.25);
  EXPECT_DOUBLE_EQ(p.ready_of(1), 0.0);
  EXPECT_DOUBLE_EQ(p.bandwidth_of(0, 1), 1e8);
  EXPECT_DOUBLE_EQ(p.latency_of(1, 0), 1e-4);
  const SimProfile q = parse_sim_profile(to_text(p));
  EXPECT_EQ(to_text(q), to_text(p));
  EXPECT_EQ(parse_sim_profile("mode=serialized-links\n").mode, LinkConcurrency::kSerialized);
}

TEST(SimProfile, RejectsBadInput) {
  EXPECT_EQ(code_of([] { parse_sim_profile("bandwidth=-1\n"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { parse_sim_profile("bandwidth=fast\n"); }), ErrorCode::kFormat);
  EXPECT_EQ(code_of([] { parse_sim_profile("colour=blue\n"); }), ErrorCode::kFormat);
  EXPECT_EQ(code_of([] { parse_sim_profile("mode=ring\n"); }), ErrorCode::kFormat);
  EXPECT_EQ(code_of([] { parse_sim_profile("just words\n"); }), ErrorCode::kFormat);
}

// ---- TCP (ranks as threads of one process) --------------------------------------------

TEST(Tcp, ParseRendezvous) {
  const auto o = parse_rendezvous("10.0.0.2:1234");
  EXPECT_EQ(o.host, "10.0.0.2");
  EXPECT_EQ(o.port, 1234);
  EXPECT_EQ(code_of([] { parse_rendezvous("nohost"); }), ErrorCode::kFormat);
  EXPECT_EQ(code_of([] { parse_rendezvous("h:99999"); }), ErrorCode::kFormat);
}

TEST(Tcp, FullMeshExchange) {
  const int p = 3;
  TcpOptions opts;
  opts.port = testing::free_port();
  opts.connect_timeout = 20s;
  TransportGroup group(p);
  std::vector<std::thread> ts;
  for (int r = 0; r < p; ++r) {
    ts.emplace_back([&, r] { group[r] = connect_tcp(r, p, opts); });
  }
  for (auto& t : ts) t.join();
  run_ranks(std::move(group), [p](Communicator& comm) {
    std::vector<uint64_t> mine(p);
    for (int q = 0; q < p; ++q) mine[q] = 10 * comm.rank() + q;
    const auto got = exchange_sizes(comm, mine);
    for (int r = 0; r < p; ++r) {
      if (got[r] != static_cast<uint64_t>(10 * r + comm.rank())) fail(ErrorCode::kProtocol, "bad");
    }
    // A large message crosses in several reads.
    const Bytes big(3 << 20, static_cast<uint8_t>(comm.rank()));
    const int next = (comm.rank() + 1) % p, prev = (comm.rank() + p - 1) % p;
    comm.send(next, Tag::kUser, big);
    const Bytes in = comm.recv(prev, Tag::kUser);
    if (in != Bytes(3 << 20, static_cast<uint8_t>(prev))) fail(ErrorCode::kProtocol, "payload");
  });
}

TEST(Tcp, PeerDisconnectSurfacesAsTransportError) {
  TcpOptions opts;
  opts.port = testing::free_port();
  opts.connect_timeout = 20s;
  std::unique_ptr<Transport> a, b;
  std::thread t([&] { b = connect_tcp(1, 2, opts); });
  a = connect_tcp(0, 2, opts);
  t.join();
  b.reset();
  EXPECT_EQ(code_of([&] { a->recv(1, Tag::kUser, 5s); }), ErrorCode::kTransport);
}

TEST(Tcp, RendezvousTimesOut) {
  TcpOptions opts;
  opts.port = testing::free_port();
  opts.connect_timeout = 300ms;
  const auto c = code_of([&] { connect_tcp(1, 2, opts); });
  EXPECT_TRUE(c == ErrorCode::kTimeout || c == ErrorCode::kTransport);
}

}  // namespace
}  // namespace zipcoll
