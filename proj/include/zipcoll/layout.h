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

namespace zipcoll::layout {

// Every section of a frame, and the frame itself, starts/ends on this boundary.
inline constexpr uint64_t kAlignment = 128;

// magic(4) version(1) flags(1) group_size_log2(1) reserved(1)
// element_count(8) zero_count(8) six u32 section offsets(24)
inline constexpr uint64_t kHeaderBytes = 48;
// 7 codebook entries + the biased window start.
inline constexpr uint64_t kCodebookBytes = 8;

inline constexpr uint64_t kMagicOffset = 0;
inline constexpr uint64_t kVersionOffset = 4;
inline constexpr uint64_t kFlagsOffset = 5;
inline constexpr uint64_t kGroupLog2Offset = 6;
inline constexpr uint64_t kReservedOffset = 7;
inline constexpr uint64_t kElementCountOffset = 8;
inline constexpr uint64_t kZeroCountOffset = 16;
inline constexpr uint64_t kCodebookOffset = 24;
inline constexpr uint64_t kSectionTableOffset = 32;
inline constexpr int kSectionCount = 6;

inline constexpr uint8_t kVersion = 1;
inline constexpr char kMagic[4] = {'Z', 'C', 'C', 'L'};

constexpr uint64_t align_up(uint64_t n) { return (n + kAlignment - 1) / kAlignment * kAlignment; }
constexpr uint64_t ceil_div(uint64_t a, uint64_t b) { return (a + b - 1) / b; }

// Unpadded section sizes for n elements.
constexpr uint64_t sign_mantissa_bytes(uint64_t n) { return n; }
constexpr uint64_t plane_bytes(uint64_t n) { return ceil_div(n, 8); }
constexpr uint64_t group_count(uint64_t n, uint64_t group_size) { return ceil_div(n, group_size); }
constexpr uint64_t group_index_bytes(uint64_t n, uint64_t group_size) {
  return 4 * group_count(n, group_size);
}

struct SectionOffsets {
  uint64_t sign_mantissa;
  uint64_t planes[3];
  uint64_t group_index;
  uint64_t zero_exponents;
};

// Canonical placement: header, then each section on its own 128-byte boundary.
constexpr SectionOffsets canonical_offsets(uint64_t n, uint64_t group_size) {
  SectionOffsets s{};
  s.sign_mantissa = align_up(kHeaderBytes + kCodebookBytes);
  s.planes[0] = s.sign_mantissa + align_up(sign_mantissa_bytes(n));
  s.planes[1] = s.planes[0] + align_up(plane_bytes(n));
  s.planes[2] = s.planes[1] + align_up(plane_bytes(n));
  s.group_index = s.planes[2] + align_up(plane_bytes(n));
  s.zero_exponents = s.group_index + align_up(group_index_bytes(n, group_size));
  return s;
}

}  // namespace zipcoll::layout
