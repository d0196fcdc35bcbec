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

#include <mutex>
#include <sstream>

#include "test_support.h"
#include "zipcoll/bench.h"
#include "zipcoll/error.h"
#include "zipcoll/random.h"

namespace zipcoll {
namespace {

TEST(BenchCsv, RoundTrip) {
  BenchRecord a;
  a.operation = "a2a-d2";
  a.transport = "sim";
  a.world_size = 4;
  a.element_count = 1000;
  a.payload_bytes = 6000;
  a.compressed_bytes = 4200;
  a.metadata_bytes = 96;
  a.time_s = 1.25e-3;
  a.virtual_time = true;
  a.verified = true;
  BenchRecord b = a;
  b.operation = "auto-rs";
  b.path = "zipped";
  b.compressed_bytes = 0;
  b.payload_bytes = 0;
  b.virtual_time = false;

  std::ostringstream out;
  const std::vector<BenchRecord> recs{a, b};
  write_csv(out, recs);
  const auto back = parse_csv(out.str());
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(to_csv(back[0]), to_csv(a));
  EXPECT_EQ(to_csv(back[1]), to_csv(b));
  EXPECT_DOUBLE_EQ(back[0].ratio(), 6000.0 / 4200.0);
  EXPECT_EQ(back[1].ratio(), 1.0);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), csv_header());
}

TEST(BenchCsv, RejectsMalformedRows) {
  EXPECT_THROW(parse_csv(csv_header() + "\nallgather,loopback,2\n"), Error);
  EXPECT_THROW(parse_csv("nonsense\n"), Error);
}

TEST(BenchFiles, Bf16Encoding) {
  const Bf16Buffer v{Bf16(0x3F80), Bf16(0x1234)};
  EXPECT_EQ(encode_bf16(v), (Bytes{0x80, 0x3F, 0x34, 0x12}));
  EXPECT_EQ(decode_bf16(encode_bf16(v)), v);
  const Bytes odd{1, 2, 3};
  try {
    decode_bf16(odd);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
  }
}

TEST(Coverage, Constant) {
  const Bf16Buffer v(100, Bf16(0x3F80));
  const auto rep = analyze_coverage(v);
  ASSERT_EQ(rep.top.size(), 1u);
  EXPECT_EQ(rep.top[0], 127);
  for (double c : rep.top_k_percent) EXPECT_DOUBLE_EQ(c, 100.0);
  EXPECT_TRUE(rep.heuristic);
}

TEST(Coverage, NormalMatchesAnalytic) {
  const auto v = normal_buffer(1000000, 1.0, 11);
  const auto rep = analyze_coverage(v);
  EXPECT_EQ(rep.top.size(), 7u);
  ASSERT_TRUE(rep.sigma.has_value());
  EXPECT_TRUE(rep.analytic_matches);
  EXPECT_FALSE(rep.heuristic) << rep.heuristic_reason;
  // Cumulative and monotone.
  for (size_t k = 1; k < rep.top_k_percent.size(); ++k) {
    EXPECT_GE(rep.top_k_percent[k], rep.top_k_percent[k - 1]);
  }
  uint64_t covered = 0;
  for (uint8_t e : rep.top) covered += rep.histogram[e];
  EXPECT_NEAR(rep.top_k_percent[6], 100.0 * covered / 1e6, 1e-9);
}

TEST(Coverage, LognormalIsFlagged) {
  const auto rep = analyze_coverage(lognormal_buffer(100000, 0.0, 1.0, 5));
  EXPECT_TRUE(rep.heuristic);
  EXPECT_FALSE(rep.heuristic_reason.empty());
  EXPECT_NE(format_coverage(rep).find("heuristic"), std::string::npos);
}

TEST(Coverage, EmptyIsAnError) {
  EXPECT_THROW(analyze_coverage({}), Error);
}

TEST(RunBench, RecordsAgreeAcrossRanks) {
  for (const auto& op : {"allgather", "a2a-d1", "a2a-d2", "reducescatter", "allreduce"}) {
    std::mutex mu;
    std::vector<std::vector<BenchRecord>> all;
    BenchOptions opt;
    opt.op = op;
    opt.sizes = {4096, 20000};
    opt.verify = true;
    run_ranks(testing::make_group(testing::Fabric::kLoopback, 3), [&](Communicator& comm) {
      auto recs = run_bench(comm, opt);
      std::lock_guard lock(mu);
      all.push_back(std::move(recs));
    });
    ASSERT_EQ(all.size(), 3u);
    for (const auto& recs : all) {
      ASSERT_EQ(recs.size(), 2u);
      for (size_t i = 0; i < recs.size(); ++i) EXPECT_EQ(to_csv(recs[i]), to_csv(all[0][i])) << op;
      EXPECT_TRUE(recs[1].verified);
      EXPECT_GT(recs[1].compressed_bytes, 0u);
    }
  }
}

TEST(RunBench, AutoRsRequiresModel) {
  BenchOptions opt;
  opt.op = "auto-rs";
  opt.sizes = {1024};
  EXPECT_THROW(run_ranks(testing::make_group(testing::Fabric::kLoopback, 2),
                         [&](Communicator& comm) { run_bench(comm, opt); }),
               Error);
}

TEST(RunBench, UnknownOperation) {
  BenchOptions opt;
  opt.op = "broadcast";
  EXPECT_THROW(run_ranks(testing::make_group(testing::Fabric::kLoopback, 2),
                         [&](Communicator& comm) { run_bench(comm, opt); }),
               Error);
}

}  // namespace
}  // namespace zipcoll
