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

#include "zipcoll/error.h"

#include <utility>

namespace zipcoll {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kDegenerateInput: return "degenerate-input";
    case ErrorCode::kCorruptChunk: return "corrupt-chunk";
    case ErrorCode::kCorruptFrame: return "corrupt-frame";
    case ErrorCode::kUnrepresentable: return "unrepresentable";
    case ErrorCode::kTransport: return "transport";
    case ErrorCode::kTimeout: return "timeout";
    case ErrorCode::kProtocol: return "protocol";
    case ErrorCode::kProfiling: return "profiling";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kVerification: return "verification";
  }
  return "unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& message, const std::string& field) {
  std::string out(to_string(code));
  out += ": ";
  if (!field.empty()) {
    out += "[";
    out += field;
    out += "] ";
  }
  out += message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, std::string message, std::string field)
    : std::runtime_error(compose(code, message, field)), code_(code), field_(std::move(field)), message_(std::move(message)) {}

void fail(ErrorCode code, std::string message, std::string field) {
  throw Error(code, std::move(message), std::move(field));
}

}  // namespace zipcoll
