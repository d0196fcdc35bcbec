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

#include <stdexcept>
#include <string>
#include <string_view>

namespace zipcoll {

enum class ErrorCode {
  kInvalidArgument,
  kDegenerateInput,
  kCorruptChunk,
  kCorruptFrame,
  kUnrepresentable,
  kTransport,
  kTimeout,
  kProtocol,
  kProfiling,
  kFormat,
  kVerification,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception. `field()` names the
// offending chunk/frame field or peer when one is known, otherwise it is empty.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string field = {});

  ErrorCode code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }
  // The message without the code/field prefix that what() carries.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string field_;
  std::string message_;
};

[[noreturn]] void fail(ErrorCode code, std::string message, std::string field = {});

}  // namespace zipcoll
