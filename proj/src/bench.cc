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


#include "zipcoll/bench.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "kv_text.h"
#include "zipcoll/error.h"
#include "zipcoll/random.h"

namespace zipcoll {

Bytes encode_bf16(std::span<const Bf16> data) {
  Bytes b(2 * data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    b[2 * i] = static_cast<uint8_t>(data[i].bits);
    b[2 * i + 1] = static_cast<uint8_t>(data[i].bits >> 8);
  }
  return b;
}

Bf16Buffer decode_bf16(std::span<const uint8_t> bytes) {
  if (bytes.size() % 2) {
    fail(ErrorCode::kFormat, "odd byte count " + std::to_string(bytes.size()) + " in a .bf16 stream",
         "length");
  }
  Bf16Buffer out(bytes.size() / 2);
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = Bf16(static_cast<uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8)));
  }
  return out;
}

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kFormat, "cannot open " + path, "path");
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kFormat, "cannot write " + path, "path");
}

Bf16Buffer read_bf16_file(const std::string& path) { return decode_bf16(read_file(path)); }

// ---- coverage ------------------------------------------------------------------

CoverageReport analyze_coverage(std::span<const Bf16> data) {
  if (data.empty()) fail(ErrorCode::kFormat, "no elements to analyze", "length");
  CoverageReport rep;
  rep.element_count = data.size();
  rep.histogram = exponent_histogram(data);

  std::array<int, 256> order;
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return rep.histogram[a] > rep.histogram[b]; });
  uint64_t cum = 0;
  for (int k = 0; k < kCodebookSize; ++k) {
    if (rep.histogram[order[k]] == 0) {
      rep.top_k_percent[k] = rep.top_k_percent[k - 1];
      continue;
    }
    rep.top.push_back(static_cast<uint8_t>(order[k]));
    cum += rep.histogram[order[k]];
    rep.top_k_percent[k] = 100.0 * static_cast<double>(cum) / static_cast<double>(data.size());
  }

  try {
    const double sigma = measure_sigma(data);
    if (sigma > 0.0 && std::isfinite(sigma)) rep.sigma = sigma;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateInput) throw;
  }
  if (rep.sigma) {
    rep.analytic = derive_codebook(*rep.sigma);
    auto a = rep.analytic->entries();
    auto h = rep.top;
    std::sort(a.begin(), a.end());
    std::sort(h.begin(), h.end());
    rep.analytic_matches = std::equal(a.begin(), a.end(), h.begin(), h.end());
  }

  // Symmetry check over finite values.
  double sum = 0.0;
  uint64_t finite = 0, positive = 0, nonzero = 0;
  for (Bf16 v : data) {
    if (!v.is_finite()) continue;
    const double x = v.to_float();
    sum += x;
    ++finite;
    if (x != 0.0) {
      ++nonzero;
      if (x > 0.0) ++positive;
    }
  }
  if (!rep.sigma) {
    rep.heuristic = true;
    rep.heuristic_reason = "no measurable spread";
  } else {
    const double mean = sum / static_cast<double>(finite);
    const double shift = std::abs(mean) / *rep.sigma;
    const double pos = nonzero ? static_cast<double>(positive) / static_cast<double>(nonzero) : 0.5;
    const double tol = 4.0 / std::sqrt(static_cast<double>(std::max<uint64_t>(finite, 1)));
    char buf[128];
    if (shift > std::max(0.1, tol)) {
      std::snprintf(buf, sizeof buf, "mean is %.3g sigma away from zero", shift);
      rep.heuristic = true;
      rep.heuristic_reason = buf;
    } else if (std::abs(pos - 0.5) > std::max(0.1, tol)) {
      std::snprintf(buf, sizeof buf, "%.1f%% of nonzero values are positive", 100.0 * pos);
      rep.heuristic = true;
      rep.heuristic_reason = buf;
    }
  }
  return rep;
}

namespace {

std::string exponent_set(std::span<const uint8_t> entries) {
  std::vector<int> v(entries.begin(), entries.end());
  std::sort(v.begin(), v.end());
  std::string out = "{";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(v[i] - 127);
  }
  return out + "}";
}

}  // namespace

std::string format_coverage(const CoverageReport& rep) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "elements: %llu\n", static_cast<unsigned long long>(rep.element_count));
  out += buf;
  if (rep.sigma) {
    std::snprintf(buf, sizeof buf, "sigma: %.6g\n", *rep.sigma);
  } else {
    std::snprintf(buf, sizeof buf, "sigma: n/a\n");
  }
  out += buf;
  out += " k  exponent  biased     count  coverage%\n";
  for (size_t k = 0; k < rep.top.size(); ++k) {
    const int e = rep.top[k];
    std::snprintf(buf, sizeof buf, "%2zu  %8d  %6d  %8llu  %9.2f\n", k + 1, e - 127, e,
                  static_cast<unsigned long long>(rep.histogram[e]), rep.top_k_percent[k]);
    out += buf;
  }
  out += "histogram top exponents:   " + exponent_set(rep.top) + "\n";
  if (rep.analytic) {
    out += "analytic codebook:         " + exponent_set(rep.analytic->entries()) + "\n";
    out += std::string("match: ") + (rep.analytic_matches ? "yes" : "no") + "\n";
  } else {
    out += "analytic codebook:         n/a\n";
  }
  if (rep.heuristic) {
    out += "note: analytic codebook is heuristic for this data (" + rep.heuristic_reason +
           "); the histogram set is authoritative\n";
  }
  return out;
}

// ---- CSV -----------------------------------------------------------------------

double BenchRecord::ratio() const {
  if (compressed_bytes == 0) return 1.0;
  return static_cast<double>(payload_bytes) / static_cast<double>(compressed_bytes);
}

std::string csv_header() {
  return "operation,transport,world_size,element_count,payload_bytes,compressed_bytes,"
         "metadata_bytes,time_s,clock,ratio,path,verified";
}

std::string to_csv(const BenchRecord& r) {
  using detail::fmt_double;
  return r.operation + "," + r.transport + "," + std::to_string(r.world_size) + "," +
         std::to_string(r.element_count) + "," + std::to_string(r.payload_bytes) + "," +
         std::to_string(r.compressed_bytes) + "," + std::to_string(r.metadata_bytes) + "," +
         fmt_double(r.time_s) + "," + (r.virtual_time ? "virtual" : "wall") + "," +
         fmt_double(r.ratio()) + "," + r.path + "," + (r.verified ? "yes" : "no");
}

void write_csv(std::ostream& out, std::span<const BenchRecord> records) {
  out << csv_header() << "\n";
  for (const auto& r : records) out << to_csv(r) << "\n";
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

uint64_t to_u64(const std::string& v, const char* field) {
  uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    fail(ErrorCode::kFormat, "bad integer '" + v + "'", field);
  }
  return out;
}

}  // namespace

std::vector<BenchRecord> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || split_commas(line) != split_commas(csv_header())) {
    fail(ErrorCode::kFormat, "missing or unexpected CSV header", "header");
  }
  std::vector<BenchRecord> out;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_commas(line);
    if (f.size() != 12) fail(ErrorCode::kFormat, "expected 12 fields: " + line, "record");
    BenchRecord r;
    r.operation = f[0];
    r.transport = f[1];
    r.world_size = static_cast<int>(to_u64(f[2], "world_size"));
    r.element_count = to_u64(f[3], "element_count");
    r.payload_bytes = to_u64(f[4], "payload_bytes");
    r.compressed_bytes = to_u64(f[5], "compressed_bytes");
    r.metadata_bytes = to_u64(f[6], "metadata_bytes");
    r.time_s = detail::to_double(f[7], "time_s");
    r.virtual_time = f[8] == "virtual";
    r.path = f[10];
    r.verified = f[11] == "yes";
    out.push_back(std::move(r));
  }
  return out;
}

// ---- collective runs -------------------------------------------------------------

const std::vector<std::string>& bench_operations() {
  static const std::vector<std::string> ops{"allgather", "a2a-d1",   "a2a-d2",
                                            "reducescatter", "auto-rs", "allreduce"};
  return ops;
}

namespace {

std::string hex16(uint16_t v) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "0x%04x", v);
  return buf;
}

// Empty string when equal, otherwise the first differing position.
std::string first_diff(std::span<const Bf16> got, std::span<const Bf16> want, const std::string& where) {
  if (got.size() != want.size()) {
    return where + ": length " + std::to_string(got.size()) + ", expected " + std::to_string(want.size());
  }
  for (size_t i = 0; i < got.size(); ++i) {
    if (got[i].bits != want[i].bits) {
      return where + " element " + std::to_string(i) + ": got " + hex16(got[i].bits) + ", expected " +
             hex16(want[i].bits);
    }
  }
  return {};
}

std::string first_diff(const std::vector<Bf16Buffer>& got, const std::vector<Bf16Buffer>& want) {
  for (size_t q = 0; q < want.size(); ++q) {
    auto d = first_diff(got[q], want[q], "chunk from rank " + std::to_string(q));
    if (!d.empty()) return d;
  }
  return {};
}

AlltoAllSpec equal_split(const Bf16Buffer& data, int p) {
  const uint64_t chunk = data.size() / static_cast<uint64_t>(p);
  AlltoAllSpec spec;
  spec.recv_counts.assign(p, chunk);
  for (int q = 0; q < p; ++q) {
    const auto begin = data.begin() + static_cast<std::ptrdiff_t>(q * chunk);
    spec.send.emplace_back(begin, begin + static_cast<std::ptrdiff_t>(chunk));
  }
  return spec;
}

struct OpResult {
  CollectiveStats stats;
  std::string path;
  std::string diff;
};

OpResult run_once(Communicator& comm, const BenchOptions& opt, const Bf16Buffer& data) {
  const int p = comm.size();
  OpResult res;
  const std::string& op = opt.op;
  if (op == "allgather") {
    const Bf16Buffer out = zip_all_gather(comm, data, opt.sigma);
    res.stats = comm.last_stats();
    if (opt.verify) res.diff = first_diff(out, reference_all_gather(comm, data), "gathered");
  } else if (op == "a2a-d1" || op == "a2a-d2") {
    const AlltoAllSpec spec = equal_split(data, p);
    const auto out = op == "a2a-d1" ? zip_all_to_all_d1(comm, spec, opt.sigma)
                                    : zip_all_to_all_d2(comm, spec, opt.sigma);
    res.stats = comm.last_stats();
    if (opt.verify) res.diff = first_diff(out, reference_all_to_all(comm, spec));
  } else if (op == "reducescatter" || op == "auto-rs") {
    const ReduceScatterSpec spec{data, data.size() / static_cast<uint64_t>(p)};
    Bf16Buffer out;
    if (op == "auto-rs") {
      if (!opt.cost_model) {
        fail(ErrorCode::kInvalidArgument, "auto-rs needs a cost profile", "cost-profile");
      }
      auto r = auto_reduce_scatter(comm, *opt.cost_model, spec, opt.sigma);
      out = std::move(r.output);
      res.path = to_string(r.path);
    } else {
      out = zip_reduce_scatter(comm, spec, opt.sigma);
    }
    res.stats = comm.last_stats();
    if (opt.verify) res.diff = first_diff(out, reference_reduce_scatter(comm, spec), "shard");
  } else if (op == "allreduce") {
    const Bf16Buffer out = zip_all_reduce(comm, data, opt.sigma);
    res.stats = comm.last_stats();
    if (opt.verify) {
      const ReduceScatterSpec spec{data, data.size() / static_cast<uint64_t>(p)};
      const Bf16Buffer shard = reference_reduce_scatter(comm, spec);
      res.diff = first_diff(out, reference_all_gather(comm, shard), "reduced");
    }
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown operation '" + op + "'", "op");
  }
  return res;
}

uint64_t sum_over_ranks(Communicator& comm, uint64_t v) {
  const auto all = all_gather_u64(comm, v);
  return std::accumulate(all.begin(), all.end(), uint64_t{0});
}

}  // namespace

std::vector<BenchRecord> run_bench(Communicator& comm, const BenchOptions& opt) {
  const auto& ops = bench_operations();
  if (std::find(ops.begin(), ops.end(), opt.op) == ops.end()) {
    fail(ErrorCode::kInvalidArgument, "unknown operation '" + opt.op + "'", "op");
  }
  const int p = comm.size();
  const int r = comm.rank();
  std::vector<BenchRecord> records;
  for (size_t i = 0; i < opt.sizes.size(); ++i) {
    uint64_t n = opt.sizes[i] / 2;
    if (opt.op != "allgather") n = n / static_cast<uint64_t>(p) * static_cast<uint64_t>(p);
    const Bf16Buffer data =
        normal_buffer(n, 1.0, opt.seed + 7919 * i + 104729 * static_cast<uint64_t>(r));
    const OpResult res = run_once(comm, opt, data);

    const auto failed = all_gather_u64(comm, res.diff.empty() ? 0 : 1);
    if (!res.diff.empty()) {
      fail(ErrorCode::kVerification, opt.op + " differs from the reference: " + res.diff,
           "rank " + std::to_string(r));
    }
    for (int q = 0; q < p; ++q) {
      if (failed[q]) {
        fail(ErrorCode::kVerification, opt.op + " differs from the reference on rank " + std::to_string(q),
             "rank " + std::to_string(q));
      }
    }

    BenchRecord rec;
    rec.operation = opt.op;
    rec.transport = opt.transport;
    rec.world_size = p;
    rec.element_count = n;
    rec.payload_bytes = sum_over_ranks(comm, res.stats.original_bytes);
    rec.compressed_bytes = sum_over_ranks(comm, res.stats.compressed_bytes);
    rec.metadata_bytes = sum_over_ranks(comm, res.stats.metadata_bytes);
    const auto times = all_gather_f64(comm, res.stats.elapsed());
    rec.time_s = *std::max_element(times.begin(), times.end());
    rec.virtual_time = comm.has_virtual_clock();
    rec.path = res.path;
    rec.verified = opt.verify;
    records.push_back(std::move(rec));
  }
  return records;
}

void run_ranks(TransportGroup group, const std::function<void(Communicator&)>& fn) {
  const size_t p = group.size();
  std::vector<std::exception_ptr> errors(p);
  std::vector<std::thread> threads;
  threads.reserve(p);
  for (size_t r = 0; r < p; ++r) {
    threads.emplace_back([&, r] {
      try {
        Communicator comm(std::move(group[r]));
        fn(comm);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();

  std::exception_ptr secondary;
  for (const auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const Error& err) {
      if (err.code() == ErrorCode::kTransport || err.code() == ErrorCode::kTimeout) {
        if (!secondary) secondary = e;
        continue;
      }
      throw;
    }
  }
  if (secondary) std::rethrow_exception(secondary);
}

}  // namespace zipcoll
