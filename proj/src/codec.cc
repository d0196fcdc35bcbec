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

#include "zipcoll/codec.h"

#include <algorithm>
#include <bit>
#include <limits>
#include <string>

#include "zipcoll/error.h"
#include "zipcoll/layout.h"

namespace zipcoll {

namespace {

[[noreturn]] void corrupt(const std::string& field, const std::string& message) {
  fail(ErrorCode::kCorruptChunk, message, field);
}

bool valid_group_size(uint64_t group_size) {
  return std::has_single_bit(group_size) && group_size >= (uint64_t{1} << kMinGroupSizeLog2) &&
         group_size <= (uint64_t{1} << kMaxGroupSizeLog2);
}

// Number of code-0 elements in [begin, end); begin is a multiple of 8.
uint64_t count_escapes(const CompressedChunk& c, uint64_t begin, uint64_t end) {
  uint64_t count = 0;
  for (uint64_t j = begin; j < end; j += 8) {
    const uint64_t byte = j / 8;
    unsigned mask = 0xFF;
    if (end - j < 8) {
      mask = (1u << (end - j)) - 1;
    }
    const unsigned any = c.exp_planes[0][byte] | c.exp_planes[1][byte] | c.exp_planes[2][byte];
    count += std::popcount(~any & mask);
  }
  return count;
}

uint64_t escapes_in_group(const CompressedChunk& c, uint64_t g) {
  const uint64_t next =
      g + 1 < c.group_index.size() ? c.group_index[g + 1] : c.zero_count;
  return next - c.group_index[g];
}

void check_structure(const CompressedChunk& c) {
  const uint64_t n = c.element_count;
  if (n == 0) corrupt("element_count", "chunk has no elements");
  if (!valid_group_size(c.group_size)) {
    corrupt("group_size", "group size " + std::to_string(c.group_size) + " is not supported");
  }
  if (c.sign_mantissa.size() != n) {
    corrupt("sign_mantissa", "expected " + std::to_string(n) + " bytes, have " +
                                 std::to_string(c.sign_mantissa.size()));
  }
  const uint64_t pb = layout::plane_bytes(n);
  for (int b = 0; b < 3; ++b) {
    const std::string field = "exp_planes[" + std::to_string(b) + "]";
    if (c.exp_planes[b].size() != pb) {
      corrupt(field, "expected " + std::to_string(pb) + " bytes, have " +
                         std::to_string(c.exp_planes[b].size()));
    }
    if (n % 8 != 0 && (c.exp_planes[b].back() >> (n % 8)) != 0) {
      corrupt(field, "bits set past the last element");
    }
  }
  const uint64_t groups = layout::group_count(n, c.group_size);
  if (c.group_index.size() != groups) {
    corrupt("group_index", "expected " + std::to_string(groups) + " entries, have " +
                               std::to_string(c.group_index.size()));
  }
  if (c.group_index[0] != 0) corrupt("group_index", "first entry must be 0");
  for (uint64_t g = 1; g < groups; ++g) {
    if (c.group_index[g] < c.group_index[g - 1]) {
      corrupt("group_index", "entry " + std::to_string(g) + " decreases");
    }
  }
  if (c.zero_count > n) corrupt("zero_count", "exceeds element_count");
  if (c.group_index.back() > c.zero_count) {
    corrupt("zero_count", "smaller than the group index total");
  }
  if (c.zero_exponents.size() != c.zero_count) {
    corrupt("zero_exponents", "expected " + std::to_string(c.zero_count) + " bytes, have " +
                                  std::to_string(c.zero_exponents.size()));
  }
}

// Decodes group g into out[0, len); the escape tally must agree with the index.
void decode_group(const CompressedChunk& c, uint64_t g, Bf16* out) {
  const auto& entries = c.codebook.entries();
  const uint64_t begin = g * c.group_size;
  const uint64_t end = std::min<uint64_t>(c.element_count, begin + c.group_size);
  const uint64_t expected = escapes_in_group(c, g);
  uint64_t zp = c.group_index[g];
  const uint64_t zp_end = zp + expected;
  for (uint64_t j = begin; j < end; ++j) {
    const uint64_t byte = j / 8;
    const unsigned bit = j % 8;
    const unsigned code = ((c.exp_planes[0][byte] >> bit) & 1u) |
                          (((c.exp_planes[1][byte] >> bit) & 1u) << 1) |
                          (((c.exp_planes[2][byte] >> bit) & 1u) << 2);
    unsigned exponent;
    if (code != 0) {
      exponent = entries[code - 1];
    } else {
      if (zp >= zp_end) {
        corrupt("group_index", "group " + std::to_string(g) + " holds more escapes than indexed");
      }
      exponent = c.zero_exponents[zp++];
    }
    const unsigned sm = c.sign_mantissa[j];
    *out++ = Bf16(static_cast<uint16_t>(((sm & 0x80u) << 8) | (exponent << 7) | (sm & 0x7Fu)));
  }
  if (zp != zp_end) {
    corrupt("group_index", "group " + std::to_string(g) + " holds fewer escapes than indexed");
  }
}

}  // namespace

int group_size_log2(uint32_t group_size) {
  if (!valid_group_size(group_size)) {
    fail(ErrorCode::kInvalidArgument,
         "group size must be a power of two in [8, 2^24], got " + std::to_string(group_size),
         "group_size");
  }
  return std::countr_zero(group_size);
}

CompressedChunk compress(std::span<const Bf16> data, const ExponentCodebook& codebook,
                         uint32_t group_size) {
  if (data.empty()) {
    fail(ErrorCode::kInvalidArgument, "cannot compress an empty buffer", "data");
  }
  group_size_log2(group_size);
  const uint64_t n = data.size();

  CompressedChunk c;
  c.element_count = n;
  c.group_size = group_size;
  c.codebook = codebook;
  c.sign_mantissa.resize(n);
  for (auto& plane : c.exp_planes) plane.assign(layout::plane_bytes(n), 0);
  c.group_index.resize(layout::group_count(n, group_size));
  c.zero_exponents.reserve(n / 16);

  uint64_t zeros = 0;
  for (uint64_t g = 0; g < c.group_index.size(); ++g) {
    if (zeros > std::numeric_limits<uint32_t>::max()) {
      fail(ErrorCode::kUnrepresentable, "escape count overflows the 32-bit group index",
           "group_index");
    }
    c.group_index[g] = static_cast<uint32_t>(zeros);
    const uint64_t end = std::min<uint64_t>(n, (g + 1) * group_size);
    for (uint64_t j = g * group_size; j < end; ++j) {
      const Bf16 w = data[j];
      c.sign_mantissa[j] = static_cast<uint8_t>((w.sign() << 7) | w.mantissa());
      const uint8_t exponent = w.biased_exponent();
      const uint8_t code = codebook.code_for(exponent);
      if (code == 0) {
        c.zero_exponents.push_back(exponent);
        ++zeros;
        continue;
      }
      const uint64_t byte = j / 8;
      const unsigned bit = j % 8;
      c.exp_planes[0][byte] |= static_cast<uint8_t>((code & 1u) << bit);
      c.exp_planes[1][byte] |= static_cast<uint8_t>(((code >> 1) & 1u) << bit);
      c.exp_planes[2][byte] |= static_cast<uint8_t>(((code >> 2) & 1u) << bit);
    }
  }
  c.zero_count = zeros;
  return c;
}

void validate(const CompressedChunk& chunk) {
  check_structure(chunk);
  const uint64_t n = chunk.element_count;
  for (uint64_t g = 0; g < chunk.group_index.size(); ++g) {
    const uint64_t begin = g * chunk.group_size;
    const uint64_t end = std::min<uint64_t>(n, begin + chunk.group_size);
    if (count_escapes(chunk, begin, end) != escapes_in_group(chunk, g)) {
      corrupt("group_index", "escape count of group " + std::to_string(g) +
                                 " disagrees with the exponent planes");
    }
  }
  // Canonical form: an exponent the codebook covers is never escaped.
  for (uint64_t i = 0; i < chunk.zero_exponents.size(); ++i) {
    if (chunk.codebook.contains(chunk.zero_exponents[i])) {
      corrupt("zero_exponents", "escaped exponent " + std::to_string(chunk.zero_exponents[i]) +
                                    " at escape " + std::to_string(i) + " is in the codebook");
    }
  }
}

Bf16Buffer decompress(const CompressedChunk& chunk) {
  check_structure(chunk);
  Bf16Buffer out(chunk.element_count);
  for (uint64_t g = 0; g < chunk.group_index.size(); ++g) {
    decode_group(chunk, g, out.data() + g * chunk.group_size);
  }
  return out;
}

Bf16Buffer decompress_group(const CompressedChunk& chunk, uint64_t group) {
  check_structure(chunk);
  if (group >= chunk.group_index.size()) {
    fail(ErrorCode::kInvalidArgument, "group " + std::to_string(group) + " out of range", "group");
  }
  const uint64_t begin = group * chunk.group_size;
  const uint64_t end = std::min<uint64_t>(chunk.element_count, begin + chunk.group_size);
  Bf16Buffer out(end - begin);
  decode_group(chunk, group, out.data());
  return out;
}

uint64_t static_size_bytes_unpadded(uint64_t element_count, uint32_t group_size) {
  if (element_count == 0) {
    fail(ErrorCode::kInvalidArgument, "element count must be at least 1", "element_count");
  }
  group_size_log2(group_size);
  return layout::kHeaderBytes + layout::kCodebookBytes +
         layout::sign_mantissa_bytes(element_count) + 3 * layout::plane_bytes(element_count) +
         layout::group_index_bytes(element_count, group_size);
}

uint64_t static_size_bytes(uint64_t element_count, uint32_t group_size) {
  if (element_count == 0) {
    fail(ErrorCode::kInvalidArgument, "element count must be at least 1", "element_count");
  }
  group_size_log2(group_size);
  return layout::canonical_offsets(element_count, group_size).zero_exponents;
}

uint64_t dynamic_size_bytes(uint64_t zero_count) { return layout::align_up(zero_count); }

}  // namespace zipcoll
