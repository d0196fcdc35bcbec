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

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "zipcoll/bf16.h"
#include "zipcoll/codebook.h"

namespace zipcoll {

inline constexpr uint32_t kDefaultGroupSize = 512;
inline constexpr int kMinGroupSizeLog2 = 3;
inline constexpr int kMaxGroupSizeLog2 = 24;

// One compressed buffer. Each element contributes a sign/mantissa byte
// (sign << 7 | mantissa) and a 3-bit exponent code split across three bit
// planes (element j -> byte j / 8, bit j % 8). Escaped elements (code 0)
// keep their raw exponent in zero_exponents, in element order.
// group_index[g] is the number of escapes before group g.
struct CompressedChunk {
  uint64_t element_count = 0;
  uint32_t group_size = kDefaultGroupSize;
  ExponentCodebook codebook = ExponentCodebook::contiguous(kFallbackBaseExponent);
  std::vector<uint8_t> sign_mantissa;
  std::array<std::vector<uint8_t>, 3> exp_planes;
  std::vector<uint32_t> group_index;
  uint64_t zero_count = 0;
  std::vector<uint8_t> zero_exponents;

  friend bool operator==(const CompressedChunk&, const CompressedChunk&) = default;
};

// Throws kInvalidArgument for empty data or a group size that is not a power
// of two in [2^kMinGroupSizeLog2, 2^kMaxGroupSizeLog2].
CompressedChunk compress(std::span<const Bf16> data, const ExponentCodebook& codebook,
                         uint32_t group_size = kDefaultGroupSize);

// Throws kCorruptChunk naming the first inconsistent field.
Bf16Buffer decompress(const CompressedChunk& chunk);

// Decodes only group g, locating its escapes through group_index[g].
Bf16Buffer decompress_group(const CompressedChunk& chunk, uint64_t group);

// Full structural check of the chunk invariants (sizes, prefix index, escape
// totals, zero tail bits). Throws kCorruptChunk.
void validate(const CompressedChunk& chunk);

// Serialized bytes of everything but the escaped exponents: header and
// codebook, sign/mantissa, three planes and group index, each padded to the
// frame alignment. Depends only on the element count and group size.
uint64_t static_size_bytes(uint64_t element_count, uint32_t group_size = kDefaultGroupSize);

// The same sum without alignment padding.
uint64_t static_size_bytes_unpadded(uint64_t element_count,
                                    uint32_t group_size = kDefaultGroupSize);

// Serialized bytes of the escaped-exponent section (padded).
uint64_t dynamic_size_bytes(uint64_t zero_count);

int group_size_log2(uint32_t group_size);

}  // namespace zipcoll
