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

#include "zipcoll/frame.h"

#include <algorithm>
#include <array>
#include <cstring>
#include <limits>
#include <string>

#include "zipcoll/error.h"
#include "zipcoll/layout.h"

namespace zipcoll {

namespace {

using layout::kAlignment;

[[noreturn]] void corrupt(const std::string& field, const std::string& message) {
  fail(ErrorCode::kCorruptFrame, message, field);
}

void put_u32(uint8_t* p, uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<uint8_t>(v >> (8 * i));
}
void put_u64(uint8_t* p, uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<uint8_t>(v >> (8 * i));
}
uint32_t get_u32(const uint8_t* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
  return v;
}
uint64_t get_u64(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return v;
}

constexpr const char* kSectionNames[layout::kSectionCount] = {
    "offset.sign_mantissa", "offset.plane0",      "offset.plane1",
    "offset.plane2",        "offset.group_index", "offset.zero_exponents"};

struct Header {
  uint8_t group_log2 = 0;
  uint64_t element_count = 0;
  uint64_t zero_count = 0;
  std::array<uint8_t, kCodebookSize> entries{};
  std::array<uint64_t, layout::kSectionCount> offsets{};
  std::array<uint64_t, layout::kSectionCount> lengths{};
  uint64_t total = 0;
};

Header read_header(std::span<const uint8_t> f) {
  if (f.size() < layout::kHeaderBytes + layout::kCodebookBytes) {
    corrupt("header", "frame shorter than its header");
  }
  if (std::memcmp(f.data() + layout::kMagicOffset, layout::kMagic, 4) != 0) {
    corrupt("magic", "bad magic");
  }
  if (f[layout::kVersionOffset] != layout::kVersion) {
    corrupt("version", "unsupported version " + std::to_string(f[layout::kVersionOffset]));
  }
  if (f[layout::kFlagsOffset] != 0) {
    corrupt("flags", "unknown flags " + std::to_string(f[layout::kFlagsOffset]));
  }
  Header h;
  h.group_log2 = f[layout::kGroupLog2Offset];
  if (h.group_log2 < kMinGroupSizeLog2 || h.group_log2 > kMaxGroupSizeLog2) {
    corrupt("group_size_log2", "unsupported group size log2 " + std::to_string(h.group_log2));
  }
  if (f[layout::kReservedOffset] != 0) corrupt("reserved", "reserved byte is not zero");
  h.element_count = get_u64(f.data() + layout::kElementCountOffset);
  h.zero_count = get_u64(f.data() + layout::kZeroCountOffset);
  if (h.element_count == 0) corrupt("element_count", "frame declares no elements");
  // Offsets are u32, so no valid frame holds more than 2^32 elements.
  if (h.element_count > std::numeric_limits<uint32_t>::max()) {
    corrupt("element_count", "element count out of range");
  }
  if (h.zero_count > h.element_count) corrupt("zero_count", "exceeds element_count");
  std::memcpy(h.entries.data(), f.data() + layout::kCodebookOffset, kCodebookSize);
  {
    std::array<bool, 256> seen{};
    for (uint8_t e : h.entries) {
      if (seen[e]) corrupt("codebook", "duplicate codebook entry " + std::to_string(e));
      seen[e] = true;
    }
  }
  if (f[layout::kCodebookOffset + kCodebookSize] != h.entries[0]) {
    corrupt("codebook.base", "window start byte disagrees with the first entry");
  }

  const uint64_t n = h.element_count;
  const uint64_t g = uint64_t{1} << h.group_log2;
  h.lengths = {layout::sign_mantissa_bytes(n), layout::plane_bytes(n), layout::plane_bytes(n),
               layout::plane_bytes(n), layout::group_index_bytes(n, g), h.zero_count};
  const auto canonical = layout::canonical_offsets(n, g);
  const std::array<uint64_t, layout::kSectionCount> expected = {
      canonical.sign_mantissa, canonical.planes[0], canonical.planes[1],
      canonical.planes[2],     canonical.group_index, canonical.zero_exponents};

  uint64_t prev_end = layout::kHeaderBytes + layout::kCodebookBytes;
  for (int s = 0; s < layout::kSectionCount; ++s) {
    const uint64_t off = get_u32(f.data() + layout::kSectionTableOffset + 4 * s);
    if (off % kAlignment != 0) corrupt(kSectionNames[s], "section is not 128-byte aligned");
    if (off < prev_end) corrupt(kSectionNames[s], "section overlaps the previous one");
    if (off != expected[s]) corrupt(kSectionNames[s], "section is not at its canonical offset");
    h.offsets[s] = off;
    prev_end = off + h.lengths[s];
  }
  h.total = layout::align_up(prev_end);
  return h;
}

bool all_zero(std::span<const uint8_t> bytes) {
  return std::all_of(bytes.begin(), bytes.end(), [](uint8_t b) { return b == 0; });
}

}  // namespace

std::vector<uint8_t> serialize(const CompressedChunk& chunk) {
  try {
    validate(chunk);
  } catch (const Error& e) {
    fail(ErrorCode::kInvalidArgument, std::string("cannot serialize invalid chunk: ") + e.message(),
         e.field());
  }
  const uint64_t n = chunk.element_count;
  if (n > std::numeric_limits<uint32_t>::max()) {
    fail(ErrorCode::kUnrepresentable, "too many elements for 32-bit section offsets",
         "element_count");
  }
  const auto off = layout::canonical_offsets(n, chunk.group_size);
  if (off.zero_exponents > std::numeric_limits<uint32_t>::max()) {
    fail(ErrorCode::kUnrepresentable, "frame too large for 32-bit section offsets", "offsets");
  }
  std::vector<uint8_t> out(off.zero_exponents + layout::align_up(chunk.zero_count), 0);

  uint8_t* p = out.data();
  std::memcpy(p + layout::kMagicOffset, layout::kMagic, 4);
  p[layout::kVersionOffset] = layout::kVersion;
  p[layout::kFlagsOffset] = 0;
  p[layout::kGroupLog2Offset] = static_cast<uint8_t>(group_size_log2(chunk.group_size));
  p[layout::kReservedOffset] = 0;
  put_u64(p + layout::kElementCountOffset, n);
  put_u64(p + layout::kZeroCountOffset, chunk.zero_count);
  const auto& entries = chunk.codebook.entries();
  std::copy(entries.begin(), entries.end(), p + layout::kCodebookOffset);
  p[layout::kCodebookOffset + kCodebookSize] = entries[0];
  const uint64_t offsets[layout::kSectionCount] = {off.sign_mantissa, off.planes[0],
                                                   off.planes[1],     off.planes[2],
                                                   off.group_index,   off.zero_exponents};
  for (int s = 0; s < layout::kSectionCount; ++s) {
    put_u32(p + layout::kSectionTableOffset + 4 * s, static_cast<uint32_t>(offsets[s]));
  }

  std::copy(chunk.sign_mantissa.begin(), chunk.sign_mantissa.end(), p + off.sign_mantissa);
  for (int b = 0; b < 3; ++b) {
    std::copy(chunk.exp_planes[b].begin(), chunk.exp_planes[b].end(), p + off.planes[b]);
  }
  for (uint64_t g = 0; g < chunk.group_index.size(); ++g) {
    put_u32(p + off.group_index + 4 * g, chunk.group_index[g]);
  }
  std::copy(chunk.zero_exponents.begin(), chunk.zero_exponents.end(), p + off.zero_exponents);
  return out;
}

FrameInfo inspect_frame(std::span<const uint8_t> frame) {
  const Header h = read_header(frame);
  FrameInfo info;
  info.element_count = h.element_count;
  info.zero_count = h.zero_count;
  info.group_size = uint32_t{1} << h.group_log2;
  info.static_bytes = h.offsets[5];
  info.total_bytes = h.total;
  return info;
}

CompressedChunk parse(std::span<const uint8_t> frame) {
  const Header h = read_header(frame);
  if (frame.size() < h.total) {
    corrupt("length", "frame truncated: need " + std::to_string(h.total) + " bytes, have " +
                          std::to_string(frame.size()));
  }
  if (frame.size() > h.total) {
    corrupt("length", "trailing bytes after frame end");
  }
  const uint8_t* p = frame.data();
  const uint64_t header_end = layout::kHeaderBytes + layout::kCodebookBytes;
  if (!all_zero(frame.subspan(header_end, h.offsets[0] - header_end))) {
    corrupt("header", "non-zero header padding");
  }
  for (int s = 0; s < layout::kSectionCount; ++s) {
    const uint64_t end = h.offsets[s] + h.lengths[s];
    const uint64_t next = s + 1 < layout::kSectionCount ? h.offsets[s + 1] : h.total;
    if (!all_zero(frame.subspan(end, next - end))) {
      corrupt(kSectionNames[s], "non-zero section padding");
    }
  }

  CompressedChunk c;
  c.element_count = h.element_count;
  c.group_size = uint32_t{1} << h.group_log2;
  c.codebook = ExponentCodebook(h.entries);
  c.zero_count = h.zero_count;
  c.sign_mantissa.assign(p + h.offsets[0], p + h.offsets[0] + h.lengths[0]);
  for (int b = 0; b < 3; ++b) {
    c.exp_planes[b].assign(p + h.offsets[1 + b], p + h.offsets[1 + b] + h.lengths[1 + b]);
  }
  c.group_index.resize(h.lengths[4] / 4);
  for (uint64_t g = 0; g < c.group_index.size(); ++g) {
    c.group_index[g] = get_u32(p + h.offsets[4] + 4 * g);
  }
  c.zero_exponents.assign(p + h.offsets[5], p + h.offsets[5] + h.lengths[5]);
  try {
    validate(c);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kCorruptChunk) throw;
    fail(ErrorCode::kCorruptFrame, e.message(), e.field());
  }
  return c;
}

StaticDynamicSplit split_static_dynamic(std::span<const uint8_t> frame) {
  const Header h = read_header(frame);
  if (frame.size() != h.total) {
    corrupt("length", "frame length " + std::to_string(frame.size()) + " does not match header (" +
                          std::to_string(h.total) + ")");
  }
  return {frame.first(h.offsets[5]), frame.subspan(h.offsets[5])};
}

std::vector<uint8_t> join_static_dynamic(std::span<const uint8_t> static_bytes,
                                         std::span<const uint8_t> dynamic_bytes) {
  std::vector<uint8_t> out;
  out.reserve(static_bytes.size() + dynamic_bytes.size());
  out.insert(out.end(), static_bytes.begin(), static_bytes.end());
  out.insert(out.end(), dynamic_bytes.begin(), dynamic_bytes.end());
  return out;
}

uint64_t container_static_size(uint64_t element_count, uint32_t group_size) {
  return static_size_bytes(element_count, group_size);
}

std::vector<std::span<const uint8_t>> split_frames(std::span<const uint8_t> stream) {
  std::vector<std::span<const uint8_t>> frames;
  while (!stream.empty()) {
    const Header h = read_header(stream);
    if (stream.size() < h.total) corrupt("length", "stream ends inside a frame");
    frames.push_back(stream.first(h.total));
    stream = stream.subspan(h.total);
  }
  return frames;
}

}  // namespace zipcoll
