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

#include <cstdint>
#include <span>
#include <vector>

#include "zipcoll/codec.h"

// Byte format of one compressed chunk (a ".zbf16" file is exactly one frame).
// All integers little-endian; see docs/format.md for the full table.
//
//   0   "ZCCL"
//   4   u8  version (1)
//   5   u8  flags (must be 0)
//   6   u8  log2(group size)
//   7   u8  reserved (must be 0)
//   8   u64 element count
//   16  u64 zero count
//   24  u8[7] codebook entries, u8 biased window start (== entries[0])
//   32  u32[6] offsets: sign/mantissa, plane 0, plane 1, plane 2, group index,
//              escaped exponents
//
// Sections follow in that order, each starting on a 128-byte boundary; the
// frame is zero-padded to a multiple of 128 bytes. Everything before the
// escaped-exponent section is the static part.
namespace zipcoll {

std::vector<uint8_t> serialize(const CompressedChunk& chunk);

// Validates header, layout, padding and every chunk invariant.
// Throws kCorruptFrame naming the first violated field.
CompressedChunk parse(std::span<const uint8_t> frame);

struct FrameInfo {
  uint64_t element_count = 0;
  uint64_t zero_count = 0;
  uint32_t group_size = 0;
  uint64_t static_bytes = 0;
  uint64_t total_bytes = 0;
};

// Header-level validation only; needs the first 56 bytes.
FrameInfo inspect_frame(std::span<const uint8_t> frame);

struct StaticDynamicSplit {
  std::span<const uint8_t> static_bytes;
  std::span<const uint8_t> dynamic_bytes;
};

StaticDynamicSplit split_static_dynamic(std::span<const uint8_t> frame);

std::vector<uint8_t> join_static_dynamic(std::span<const uint8_t> static_bytes,
                                         std::span<const uint8_t> dynamic_bytes);

// Length of the static span for a frame of n elements (same as static_size_bytes).
uint64_t container_static_size(uint64_t element_count, uint32_t group_size = kDefaultGroupSize);

// Splits a concatenation of frames into the individual frames.
std::vector<std::span<const uint8_t>> split_frames(std::span<const uint8_t> stream);

}  // namespace zipcoll
