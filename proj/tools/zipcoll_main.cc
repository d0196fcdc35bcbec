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


// zipcoll: data generation, file compression, coverage analysis, multi-rank
// collective benchmarks and switcher profiling.

#include <CLI11.hpp>

#include <bit>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "zipcoll/bench.h"
#include "zipcoll/codebook.h"
#include "zipcoll/codec.h"
#include "zipcoll/error.h"
#include "zipcoll/frame.h"
#include "zipcoll/random.h"
#include "zipcoll/sim.h"
#include "zipcoll/switcher.h"
#include "zipcoll/tcp.h"

namespace {

using namespace zipcoll;

constexpr int kExitError = 1;
constexpr int kExitVerify = 3;

// "4096", "64K", "64KiB", "1M", "16MiB", "1G".
uint64_t parse_size(const std::string& text) {
  size_t pos = 0;
  uint64_t value = 0;
  try {
    value = std::stoull(text, &pos);
  } catch (const std::exception&) {
    fail(ErrorCode::kInvalidArgument, "bad size '" + text + "'", "size");
  }
  static const std::map<std::string, uint64_t> units{
      {"", 1},          {"B", 1},          {"K", 1ull << 10}, {"KiB", 1ull << 10},
      {"M", 1ull << 20}, {"MiB", 1ull << 20}, {"G", 1ull << 30}, {"GiB", 1ull << 30}};
  const auto it = units.find(text.substr(pos));
  if (it == units.end()) fail(ErrorCode::kInvalidArgument, "bad size unit in '" + text + "'", "size");
  return value * it->second;
}

std::vector<uint64_t> parse_sizes(const std::vector<std::string>& texts) {
  std::vector<uint64_t> out;
  for (const auto& t : texts) out.push_back(parse_size(t));
  return out;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) fail(ErrorCode::kFormat, "cannot write " + path, "out");
}

// ---- gen -----------------------------------------------------------------------

struct GenArgs {
  std::string dist = "normal";
  double sigma = 1.0;
  double mu = 0.0;
  double value = 1.0;
  uint64_t count = 0;
  uint64_t seed = 1;
  std::string input;
  std::string out;
};

int cmd_gen(const GenArgs& a) {
  Bf16Buffer data;
  if (a.dist == "file") {
    if (a.input.empty()) fail(ErrorCode::kInvalidArgument, "--dist file needs --input", "input");
    // Raw little-endian FP32 values, rounded to nearest-even.
    const Bytes raw = read_file(a.input);
    if (raw.size() % 4) fail(ErrorCode::kFormat, "FP32 input length is not a multiple of 4", "input");
    data.resize(raw.size() / 4);
    for (size_t i = 0; i < data.size(); ++i) {
      uint32_t u = 0;
      for (int k = 0; k < 4; ++k) u |= static_cast<uint32_t>(raw[4 * i + k]) << (8 * k);
      data[i] = Bf16::from_float(std::bit_cast<float>(u));
    }
  } else {
    if (a.count < 1) fail(ErrorCode::kInvalidArgument, "--count must be >= 1", "count");
    if (a.dist == "normal") {
      if (!(a.sigma > 0.0)) fail(ErrorCode::kInvalidArgument, "--sigma must be > 0", "sigma");
      data = normal_buffer(a.count, a.sigma, a.seed, a.mu);
    } else if (a.dist == "lognormal") {
      if (!(a.sigma > 0.0)) fail(ErrorCode::kInvalidArgument, "--sigma must be > 0", "sigma");
      data = lognormal_buffer(a.count, a.mu, a.sigma, a.seed);
    } else if (a.dist == "constant") {
      data = constant_buffer(a.count, a.value);
    } else {
      fail(ErrorCode::kInvalidArgument, "unknown distribution '" + a.dist + "'", "dist");
    }
  }
  write_file(a.out, encode_bf16(data));
  return 0;
}

// ---- analyze / zip / unzip -----------------------------------------------------------

int cmd_analyze(const std::string& path) {
  const Bf16Buffer data = read_bf16_file(path);
  if (data.empty()) fail(ErrorCode::kFormat, path + " is empty", "length");
  std::cout << format_coverage(analyze_coverage(data));
  return 0;
}

int cmd_zip(const std::string& path, std::string out, std::optional<double> sigma) {
  const Bf16Buffer data = read_bf16_file(path);
  if (data.empty()) fail(ErrorCode::kFormat, path + " is empty", "length");
  const CompressedChunk chunk = compress(data, select_codebook(data, sigma));
  const Bytes frame = serialize(chunk);
  if (out.empty()) out = path + ".zbf16";
  write_file(out, frame);
  const double ratio = static_cast<double>(2 * data.size()) / static_cast<double>(frame.size());
  std::printf("elements: %zu\noriginal bytes: %zu\ncompressed bytes: %zu\nescapes: %llu\nratio: %.4f\n",
              data.size(), 2 * data.size(), frame.size(),
              static_cast<unsigned long long>(chunk.zero_count), ratio);
  return 0;
}

int cmd_unzip(const std::string& path, std::string out) {
  const Bytes frame = read_file(path);
  const Bf16Buffer data = decompress(parse(frame));
  if (out.empty()) out = path + ".bf16";
  write_file(out, encode_bf16(data));
  return 0;
}

// ---- multi-rank commands -----------------------------------------------------------

struct RunArgs {
  std::string transport = "loopback";
  int world = 4;
  int rank = -1;
  std::string rendezvous;
  std::string sim_profile;
  int timeout_ms = static_cast<int>(kDefaultTimeout.count());
};

// Runs fn on every rank of the selected transport and returns rank 0's value
// (TCP: this process's rank; only rank 0 gets a value).
template <typename T>
std::optional<T> run_on_ranks(const RunArgs& a, const std::function<T(Communicator&)>& fn) {
  if (a.world < 1) fail(ErrorCode::kInvalidArgument, "--world must be >= 1", "world");
  const std::chrono::milliseconds timeout(a.timeout_ms);
  std::optional<T> result;
  if (a.transport == "tcp") {
    if (a.rank < 0 || a.rank >= a.world) {
      fail(ErrorCode::kInvalidArgument, "--rank must be in [0, world)", "rank");
    }
    TcpOptions opts;
    if (!a.rendezvous.empty()) {
      opts = parse_rendezvous(a.rendezvous);
    } else if (auto env = rendezvous_from_env()) {
      opts = *env;
    }
    Communicator comm(connect_tcp(a.rank, a.world, opts), timeout);
    T value = fn(comm);
    if (a.rank == 0) result = std::move(value);
    return result;
  }
  TransportGroup group;
  if (a.transport == "loopback") {
    group = make_loopback_group(a.world);
  } else if (a.transport == "sim") {
    const SimProfile profile = a.sim_profile.empty() ? SimProfile{} : load_sim_profile(a.sim_profile);
    group = make_sim_group(a.world, profile);
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown transport '" + a.transport + "'", "transport");
  }
  run_ranks(std::move(group), [&](Communicator& comm) {
    comm.set_timeout(timeout);
    T value = fn(comm);
    if (comm.rank() == 0) result = std::move(value);
  });
  return result;
}

struct CollectiveArgs {
  std::string op = "allgather";
  std::vector<std::string> sizes{"1MiB"};
  uint64_t seed = 1;
  std::optional<double> sigma;
  bool verify = false;
  std::string cost_profile;
  std::string out;
};

int cmd_collective(const RunArgs& run, const CollectiveArgs& a) {
  BenchOptions opt;
  opt.op = a.op;
  opt.transport = run.transport;
  opt.sizes = parse_sizes(a.sizes);
  opt.seed = a.seed;
  opt.sigma = a.sigma;
  opt.verify = a.verify;
  if (!a.cost_profile.empty()) opt.cost_model = load_cost_model(a.cost_profile);
  if (opt.op == "auto-rs" && !opt.cost_model) {
    fail(ErrorCode::kInvalidArgument, "auto-rs needs --cost-profile", "cost-profile");
  }
  const auto records = run_on_ranks<std::vector<BenchRecord>>(
      run, [&](Communicator& comm) { return run_bench(comm, opt); });
  if (records) {
    std::ostringstream csv;
    write_csv(csv, *records);
    emit(a.out, csv.str());
  }
  return 0;
}

struct ProfileArgs {
  std::vector<std::string> sizes;
  int trials = 5;
  uint64_t seed = 1;
  double s = 1.0;
  std::optional<double> sigma;
  std::string out;
};

int cmd_profile(const RunArgs& run, const ProfileArgs& a) {
  ProfileOptions opt;
  if (!a.sizes.empty()) opt.sizes = parse_sizes(a.sizes);
  opt.trials = a.trials;
  opt.seed = a.seed;
  opt.s = a.s;
  opt.sigma = a.sigma;
  const auto model = run_on_ranks<CostModel>(
      run, [&](Communicator& comm) { return profile(comm, opt).model; });
  if (model) emit(a.out, to_text(*model));
  return 0;
}

// gnuplot-ready columns, one data block per operation (select with `index`).
int cmd_plot(const std::string& in, const std::string& out) {
  const Bytes raw = read_file(in);
  const auto records = parse_csv(std::string(raw.begin(), raw.end()));
  std::map<std::string, std::vector<const BenchRecord*>> by_op;
  std::vector<std::string> order;
  for (const auto& r : records) {
    if (!by_op.count(r.operation)) order.push_back(r.operation);
    by_op[r.operation].push_back(&r);
  }
  std::string text;
  for (const auto& op : order) {
    text += "# " + op + "\n# element_count time_s ratio\n";
    for (const auto* r : by_op[op]) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%llu %.9g %.6f\n",
                    static_cast<unsigned long long>(r->element_count), r->time_s, r->ratio());
      text += buf;
    }
    text += "\n\n";
  }
  emit(out, text);
  return 0;
}

void add_run_flags(CLI::App* cmd, RunArgs& run) {
  cmd->add_option("--transport", run.transport, "loopback | sim | tcp")
      ->check(CLI::IsMember({"loopback", "sim", "tcp"}));
  cmd->add_option("--world,--ranks", run.world, "number of ranks");
  cmd->add_option("--rank", run.rank, "this process's rank (tcp)");
  cmd->add_option("--rendezvous", run.rendezvous,
                  std::string("host:port of rank 0 (tcp; default $") + kRendezvousEnv + ")");
  cmd->add_option("--sim-profile", run.sim_profile, "network model file (sim)");
  cmd->add_option("--timeout-ms", run.timeout_ms, "receive timeout");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zipcoll: lossless BF16 compressed collectives"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "write a .bf16 file");
  gen_cmd->add_option("--dist", gen.dist, "normal | lognormal | constant | file")
      ->check(CLI::IsMember({"normal", "lognormal", "constant", "file"}));
  gen_cmd->add_option("--sigma", gen.sigma, "standard deviation (normal, lognormal)");
  gen_cmd->add_option("--mu", gen.mu, "mean (normal) or log-domain mean (lognormal)");
  gen_cmd->add_option("--value", gen.value, "value (constant)");
  gen_cmd->add_option("--count,-n", gen.count, "number of elements");
  gen_cmd->add_option("--seed", gen.seed, "random seed");
  gen_cmd->add_option("--input", gen.input, "raw little-endian FP32 file (file)");
  gen_cmd->add_option("--out,-o", gen.out, "output .bf16 file")->required();

  std::string analyze_path;
  auto* analyze_cmd = app.add_subcommand("analyze", "exponent coverage and codebooks of a .bf16 file");
  analyze_cmd->add_option("file", analyze_path)->required();

  std::string zip_path, zip_out;
  std::optional<double> zip_sigma;
  auto* zip_cmd = app.add_subcommand("zip", "compress a .bf16 file into a .zbf16 frame");
  zip_cmd->add_option("file", zip_path)->required();
  zip_cmd->add_option("--out,-o", zip_out, "output file (default <file>.zbf16)");
  zip_cmd->add_option("--sigma", zip_sigma, "derive the codebook from this sigma instead of measuring");

  std::string unzip_path, unzip_out;
  auto* unzip_cmd = app.add_subcommand("unzip", "decompress a .zbf16 frame");
  unzip_cmd->add_option("file", unzip_path)->required();
  unzip_cmd->add_option("--out,-o", unzip_out, "output file (default <file>.bf16)");

  RunArgs coll_run;
  CollectiveArgs coll;
  auto* coll_cmd = app.add_subcommand("collective", "run a collective and emit CSV records");
  add_run_flags(coll_cmd, coll_run);
  coll_cmd->add_option("--op", coll.op, "allgather | a2a-d1 | a2a-d2 | reducescatter | auto-rs | allreduce")
      ->check(CLI::IsMember(bench_operations()));
  coll_cmd->add_option("--size", coll.sizes, "input bytes per rank (repeatable; K/M/G suffixes)");
  coll_cmd->add_option("--seed", coll.seed, "random seed");
  coll_cmd->add_option("--sigma", coll.sigma, "codebook sigma (default: measured per rank)");
  coll_cmd->add_flag("--verify", coll.verify, "compare with the reference collective bit-for-bit");
  coll_cmd->add_option("--cost-profile", coll.cost_profile, "cost model file (auto-rs)");
  coll_cmd->add_option("--out,-o", coll.out, "CSV output (default stdout)");

  RunArgs prof_run;
  ProfileArgs prof;
  auto* prof_cmd = app.add_subcommand("profile", "fit the reduce-scatter cost models");
  add_run_flags(prof_cmd, prof_run);
  prof_cmd->add_option("--size", prof.sizes, "profiled input bytes per rank (repeatable)");
  prof_cmd->add_option("--trials", prof.trials, "timed runs per size (median)");
  prof_cmd->add_option("--seed", prof.seed, "random seed");
  prof_cmd->add_option("--precision-scale", prof.s, "zip element bytes / native element bytes");
  prof_cmd->add_option("--sigma", prof.sigma, "codebook sigma (default: measured per rank)");
  prof_cmd->add_option("--out,-o", prof.out, "profile output (default stdout)");

  std::string plot_in, plot_out;
  auto* plot_cmd = app.add_subcommand("plot", "turn a CSV report into gnuplot data blocks");
  plot_cmd->add_option("csv", plot_in)->required();
  plot_cmd->add_option("--out,-o", plot_out, "output (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_cmd) return cmd_gen(gen);
    if (*analyze_cmd) return cmd_analyze(analyze_path);
    if (*zip_cmd) return cmd_zip(zip_path, zip_out, zip_sigma);
    if (*unzip_cmd) return cmd_unzip(unzip_path, unzip_out);
    if (*coll_cmd) return cmd_collective(coll_run, coll);
    if (*prof_cmd) return cmd_profile(prof_run, prof);
    if (*plot_cmd) return cmd_plot(plot_in, plot_out);
  } catch (const Error& e) {
    std::fprintf(stderr, "zipcoll: %s\n", e.what());
    return e.code() == ErrorCode::kVerification ? kExitVerify : kExitError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "zipcoll: %s\n", e.what());
    return kExitError;
  }
  return 0;
}
