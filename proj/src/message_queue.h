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
#include <condition_variable>
#include <deque>
#include <mutex>
#include <string>

#include "zipcoll/error.h"
#include "zipcoll/transport.h"

namespace zipcoll::detail {

struct Message {
  Tag tag = Tag::kUser;
  Bytes payload;
};

inline Bytes take_payload(Message&& m, Tag expected, int peer) {
  if (m.tag != expected) {
    fail(ErrorCode::kProtocol,
         "expected tag " + std::to_string(static_cast<uint32_t>(expected)) + " from rank " +
             std::to_string(peer) + ", got " + std::to_string(static_cast<uint32_t>(m.tag)),
         "peer " + std::to_string(peer));
  }
  return std::move(m.payload);
}

// Unbounded FIFO of messages from one peer. Once closed, pop() drains what is
// left and then reports the close reason.
class MessageQueue {
 public:
  void push(Message m) {
    {
      std::lock_guard lock(mu_);
      items_.push_back(std::move(m));
    }
    cv_.notify_all();
  }

  void close(std::string reason) {
    {
      std::lock_guard lock(mu_);
      if (closed_) return;
      closed_ = true;
      reason_ = std::move(reason);
    }
    cv_.notify_all();
  }

  Message pop(std::chrono::milliseconds timeout, int peer) {
    std::unique_lock lock(mu_);
    const bool ready =
        cv_.wait_for(lock, timeout, [&] { return !items_.empty() || closed_; });
    if (!ready) {
      fail(ErrorCode::kTimeout, "no message from rank " + std::to_string(peer) + " within " +
                                    std::to_string(timeout.count()) + " ms",
           "peer " + std::to_string(peer));
    }
    if (items_.empty()) {
      fail(ErrorCode::kTransport, reason_, "peer " + std::to_string(peer));
    }
    Message m = std::move(items_.front());
    items_.pop_front();
    return m;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Message> items_;
  bool closed_ = false;
  std::string reason_;
};

}  // namespace zipcoll::detail
