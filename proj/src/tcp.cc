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

#include "zipcoll/tcp.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <thread>

#include "message_queue.h"
#include "zipcoll/error.h"

namespace zipcoll {

TcpOptions parse_rendezvous(std::string_view spec) {
  const auto colon = spec.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    fail(ErrorCode::kFormat, "expected host:port, got '" + std::string(spec) + "'", kRendezvousEnv);
  }
  TcpOptions opts;
  opts.host = std::string(spec.substr(0, colon));
  const auto port_text = spec.substr(colon + 1);
  unsigned port = 0;
  auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port == 0 || port > 65535) {
    fail(ErrorCode::kFormat, "bad port '" + std::string(port_text) + "'", kRendezvousEnv);
  }
  opts.port = static_cast<uint16_t>(port);
  return opts;
}

std::optional<TcpOptions> rendezvous_from_env() {
  const char* value = std::getenv(kRendezvousEnv);
  if (value == nullptr || *value == '\0') return std::nullopt;
  return parse_rendezvous(value);
}

namespace {

using Clock = std::chrono::steady_clock;

constexpr size_t kWireHeaderBytes = 16;

[[noreturn]] void sys_fail(const std::string& what) {
  fail(ErrorCode::kTransport, what + ": " + std::strerror(errno));
}

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = o.fd_;
      o.fd_ = -1;
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { reset(); }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

void write_all(int fd, const uint8_t* data, size_t len) {
  while (len > 0) {
    const ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      sys_fail("send");
    }
    data += n;
    len -= static_cast<size_t>(n);
  }
}

// False on orderly EOF before any byte was read.
bool read_all(int fd, uint8_t* data, size_t len) {
  size_t got = 0;
  while (got < len) {
    const ssize_t n = ::recv(fd, data + got, len - got, 0);
    if (n == 0) {
      if (got == 0) return false;
      fail(ErrorCode::kTransport, "connection closed mid-message");
    }
    if (n < 0) {
      if (errno == EINTR) continue;
      sys_fail("recv");
    }
    got += static_cast<size_t>(n);
  }
  return true;
}

void put_le(uint8_t* p, uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) p[i] = static_cast<uint8_t>(v >> (8 * i));
}
uint64_t get_le(const uint8_t* p, int bytes) {
  uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return v;
}

void write_message(int fd, Tag tag, int src, std::span<const uint8_t> payload) {
  uint8_t header[kWireHeaderBytes];
  put_le(header, payload.size(), 8);
  put_le(header + 8, static_cast<uint32_t>(tag), 4);
  put_le(header + 12, static_cast<uint32_t>(src), 4);
  write_all(fd, header, sizeof header);
  if (!payload.empty()) write_all(fd, payload.data(), payload.size());
}

struct WireMessage {
  Tag tag;
  int src;
  Bytes payload;
};

std::optional<WireMessage> read_message(int fd) {
  uint8_t header[kWireHeaderBytes];
  if (!read_all(fd, header, sizeof header)) return std::nullopt;
  WireMessage m;
  const uint64_t len = get_le(header, 8);
  m.tag = static_cast<Tag>(get_le(header + 8, 4));
  m.src = static_cast<int>(get_le(header + 12, 4));
  m.payload.resize(len);
  if (len > 0 && !read_all(fd, m.payload.data(), len)) {
    fail(ErrorCode::kTransport, "connection closed mid-message");
  }
  return m;
}

void wait_readable(int fd, Clock::time_point deadline, const char* what) {
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (left.count() <= 0) fail(ErrorCode::kTimeout, std::string("timed out waiting for ") + what);
    pollfd p{fd, POLLIN, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(left.count()));
    if (rc > 0) return;
    if (rc < 0 && errno != EINTR) sys_fail("poll");
  }
}

WireMessage read_message_by(int fd, Clock::time_point deadline, const char* what) {
  wait_readable(fd, deadline, what);
  auto m = read_message(fd);
  if (!m) fail(ErrorCode::kTransport, std::string("connection closed during ") + what);
  return std::move(*m);
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

in_addr resolve_ipv4(const std::string& host) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    fail(ErrorCode::kTransport, "cannot resolve host '" + host + "'");
  }
  const in_addr addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

Socket make_listener(in_addr addr, uint16_t port, int backlog) {
  Socket s(::socket(AF_INET, SOCK_STREAM, 0));
  if (!s.valid()) sys_fail("socket");
  int one = 1;
  ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_addr = addr;
  sa.sin_port = htons(port);
  if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) sys_fail("bind");
  if (::listen(s.fd(), backlog) != 0) sys_fail("listen");
  return s;
}

uint16_t local_port(int fd) {
  sockaddr_in sa{};
  socklen_t len = sizeof sa;
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &len) != 0) sys_fail("getsockname");
  return ntohs(sa.sin_port);
}

Socket accept_by(int listener, Clock::time_point deadline, in_addr* peer_addr) {
  wait_readable(listener, deadline, "incoming connection");
  sockaddr_in sa{};
  socklen_t len = sizeof sa;
  Socket s(::accept(listener, reinterpret_cast<sockaddr*>(&sa), &len));
  if (!s.valid()) sys_fail("accept");
  if (peer_addr) *peer_addr = sa.sin_addr;
  set_nodelay(s.fd());
  return s;
}

// Retries until the peer listens or the deadline passes.
Socket connect_by(in_addr addr, uint16_t port, Clock::time_point deadline) {
  for (;;) {
    Socket s(::socket(AF_INET, SOCK_STREAM, 0));
    if (!s.valid()) sys_fail("socket");
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_addr = addr;
    sa.sin_port = htons(port);
    if (::connect(s.fd(), reinterpret_cast<sockaddr*>(&sa), sizeof sa) == 0) {
      set_nodelay(s.fd());
      return s;
    }
    if (Clock::now() >= deadline) sys_fail("connect");
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

Bytes hello_payload(int world, uint32_t port) {
  Bytes b(8);
  put_le(b.data(), static_cast<uint32_t>(world), 4);
  put_le(b.data() + 4, port, 4);
  return b;
}

class TcpTransport final : public Transport {
 public:
  TcpTransport(int rank, int world, std::vector<Socket> sockets)
      : rank_(rank), world_(world), sockets_(std::move(sockets)), inbox_(world), send_mu_(world) {
    for (int peer = 0; peer < world_; ++peer) {
      if (peer == rank_) continue;
      readers_.emplace_back([this, peer] { read_loop(peer); });
    }
  }

  ~TcpTransport() override {
    for (auto& s : sockets_) {
      if (s.valid()) ::shutdown(s.fd(), SHUT_RDWR);
    }
    for (auto& t : readers_) t.join();
  }

  int rank() const override { return rank_; }
  int world_size() const override { return world_; }

  void send(int peer, Tag tag, std::span<const uint8_t> payload) override {
    check_peer(peer);
    if (peer == rank_) {
      inbox_[peer].push({tag, Bytes(payload.begin(), payload.end())});
      return;
    }
    std::lock_guard lock(send_mu_[peer]);
    try {
      write_message(sockets_[peer].fd(), tag, rank_, payload);
    } catch (const Error& e) {
      fail(ErrorCode::kTransport, std::string("send to rank ") + std::to_string(peer) + " failed: " + e.message(),
           "peer " + std::to_string(peer));
    }
  }

  Bytes recv(int peer, Tag tag, std::chrono::milliseconds timeout) override {
    check_peer(peer);
    return detail::take_payload(inbox_[peer].pop(timeout, peer), tag, peer);
  }

 private:
  void check_peer(int peer) const {
    if (peer < 0 || peer >= world_) {
      fail(ErrorCode::kInvalidArgument, "peer " + std::to_string(peer) + " out of range", "peer");
    }
  }

  void read_loop(int peer) {
    const int fd = sockets_[peer].fd();
    try {
      for (;;) {
        auto m = read_message(fd);
        if (!m) break;
        if (m->src != peer) {
          inbox_[peer].close("rank " + std::to_string(peer) + " sent a message labelled as rank " +
                             std::to_string(m->src));
          return;
        }
        inbox_[peer].push({m->tag, std::move(m->payload)});
      }
      inbox_[peer].close("rank " + std::to_string(peer) + " disconnected");
    } catch (const std::exception& e) {
      inbox_[peer].close(std::string("connection to rank ") + std::to_string(peer) + " failed: " + e.what());
    }
  }

  int rank_;
  int world_;
  std::vector<Socket> sockets_;
  std::vector<detail::MessageQueue> inbox_;
  std::vector<std::mutex> send_mu_;
  std::vector<std::thread> readers_;
};

}  // namespace

std::unique_ptr<Transport> connect_tcp(int rank, int world_size, const TcpOptions& options) {
  if (world_size < 1 || rank < 0 || rank >= world_size) {
    fail(ErrorCode::kInvalidArgument,
         "rank " + std::to_string(rank) + " outside world of " + std::to_string(world_size), "rank");
  }
  const auto deadline = Clock::now() + options.connect_timeout;
  const in_addr root_addr = resolve_ipv4(options.host);
  std::vector<Socket> sockets(world_size);

  if (rank == 0) {
    Socket listener = make_listener(root_addr, options.port, world_size);
    std::vector<in_addr> addrs(world_size);
    std::vector<uint32_t> ports(world_size, 0);
    addrs[0] = root_addr;
    ports[0] = options.port;
    for (int i = 1; i < world_size; ++i) {
      in_addr peer_addr{};
      Socket s = accept_by(listener.fd(), deadline, &peer_addr);
      WireMessage hello = read_message_by(s.fd(), deadline, "hello");
      if (hello.tag != Tag::kHello || hello.payload.size() != 8) {
        fail(ErrorCode::kProtocol, "malformed hello during rendezvous");
      }
      const int peer = hello.src;
      const int peer_world = static_cast<int>(get_le(hello.payload.data(), 4));
      if (peer <= 0 || peer >= world_size || sockets[peer].valid()) {
        fail(ErrorCode::kProtocol, "unexpected rank " + std::to_string(peer) + " in hello");
      }
      if (peer_world != world_size) {
        fail(ErrorCode::kProtocol, "rank " + std::to_string(peer) + " believes world size is " +
                                       std::to_string(peer_world));
      }
      addrs[peer] = peer_addr;
      ports[peer] = static_cast<uint32_t>(get_le(hello.payload.data() + 4, 4));
      sockets[peer] = std::move(s);
    }
    Bytes table(8 * static_cast<size_t>(world_size));
    for (int r = 0; r < world_size; ++r) {
      std::memcpy(table.data() + 8 * r, &addrs[r].s_addr, 4);
      put_le(table.data() + 8 * r + 4, ports[r], 4);
    }
    for (int r = 1; r < world_size; ++r) write_message(sockets[r].fd(), Tag::kHello, 0, table);
  } else {
    in_addr any{};
    any.s_addr = htonl(INADDR_ANY);
    Socket listener = make_listener(any, 0, world_size);
    const uint16_t my_port = local_port(listener.fd());

    Socket root = connect_by(root_addr, options.port, deadline);
    write_message(root.fd(), Tag::kHello, rank, hello_payload(world_size, my_port));
    WireMessage reply = read_message_by(root.fd(), deadline, "address table");
    if (reply.tag != Tag::kHello || reply.payload.size() != 8 * static_cast<size_t>(world_size)) {
      fail(ErrorCode::kProtocol, "malformed address table from rank 0");
    }
    sockets[0] = std::move(root);

    for (int peer = 1; peer < rank; ++peer) {
      in_addr addr{};
      std::memcpy(&addr.s_addr, reply.payload.data() + 8 * peer, 4);
      const auto port = static_cast<uint16_t>(get_le(reply.payload.data() + 8 * peer + 4, 4));
      Socket s = connect_by(addr, port, deadline);
      write_message(s.fd(), Tag::kHello, rank, hello_payload(world_size, 0));
      sockets[peer] = std::move(s);
    }
    for (int i = rank + 1; i < world_size; ++i) {
      Socket s = accept_by(listener.fd(), deadline, nullptr);
      WireMessage hello = read_message_by(s.fd(), deadline, "hello");
      const int peer = hello.src;
      if (hello.tag != Tag::kHello || peer <= rank || peer >= world_size || sockets[peer].valid()) {
        fail(ErrorCode::kProtocol, "unexpected hello from rank " + std::to_string(peer));
      }
      sockets[peer] = std::move(s);
    }
  }
  return std::make_unique<TcpTransport>(rank, world_size, std::move(sockets));
}

}  // namespace zipcoll
