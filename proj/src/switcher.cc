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


#include "zipcoll/switcher.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "kv_text.h"
#include "zipcoll/codebook.h"
#include "zipcoll/codec.h"
#include "zipcoll/error.h"
#include "zipcoll/frame.h"
#include "zipcoll/random.h"

namespace zipcoll {

void CostModel::check() const {
  const auto nonneg = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      fail(ErrorCode::kInvalidArgument, std::string(name) + " must be finite and >= 0", name);
    }
  };
  nonneg(alpha_rs, "alpha_rs");
  nonneg(beta_rs, "beta_rs");
  nonneg(alpha_a2a, "alpha_a2a");
  nonneg(beta_a2a, "beta_a2a");
  if (!(e > 0.0 && e <= 1.0)) fail(ErrorCode::kInvalidArgument, "e must lie in (0, 1]", "e");
  if (!(s > 0.0) || !std::isfinite(s)) fail(ErrorCode::kInvalidArgument, "s must be > 0", "s");
}

const char* to_string(RsPath path) { return path == RsPath::kZipped ? "zipped" : "native"; }

Prediction predict(const CostModel& model, double d) {
  if (!(d >= 0.0)) fail(ErrorCode::kInvalidArgument, "payload size must be >= 0", "d");
  return {model.alpha_rs + model.beta_rs * d,
          model.alpha_a2a + model.beta_a2a * model.e * model.s * d};
}

RsPath select(const CostModel& model, double d) {
  const Prediction p = predict(model, d);
  return p.t_a2a < p.t_rs ? RsPath::kZipped : RsPath::kNative;
}

double crossover(const CostModel& model) {
  const double denom = model.beta_rs - model.beta_a2a * model.e * model.s;
  if (denom == 0.0) return -1.0;
  const double d = (model.alpha_a2a - model.alpha_rs) / denom;
  return d > 0.0 ? d : -1.0;
}

LinearFit fit_linear(std::span<const double> d, std::span<const double> t) {
  if (d.size() != t.size()) fail(ErrorCode::kInvalidArgument, "size/time length mismatch", "t");
  if (std::set<double>(d.begin(), d.end()).size() < 2) {
    fail(ErrorCode::kInvalidArgument, "need at least two distinct sizes", "sizes");
  }
  const auto n = static_cast<double>(d.size());
  double md = 0.0, mt = 0.0;
  for (size_t i = 0; i < d.size(); ++i) {
    md += d[i];
    mt += t[i];
  }
  md /= n;
  mt /= n;
  double sdd = 0.0, sdt = 0.0;
  for (size_t i = 0; i < d.size(); ++i) {
    sdd += (d[i] - md) * (d[i] - md);
    sdt += (d[i] - md) * (t[i] - mt);
  }
  LinearFit fit;
  fit.beta = sdt / sdd;
  fit.alpha = mt - fit.beta * md;
  double ss = 0.0;
  for (size_t i = 0; i < d.size(); ++i) {
    const double r = t[i] - (fit.alpha + fit.beta * d[i]);
    ss += r * r;
  }
  fit.rms = std::sqrt(ss / n);
  return fit;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double slowest(Communicator& comm, double local) {
  const auto all = all_gather_f64(comm, local);
  return *std::max_element(all.begin(), all.end());
}

ProfileResult run_profile(Communicator& comm, const ProfileOptions& opt) {
  const int p = comm.size();
  const int r = comm.rank();
  ProfileResult result;
  uint64_t original = 0, compressed = 0;

  for (size_t i = 0; i < opt.sizes.size(); ++i) {
    const uint64_t shard_len = opt.sizes[i] / 2 / static_cast<uint64_t>(p);
    ReduceScatterSpec spec;
    spec.shard_len = shard_len;
    spec.input = normal_buffer(shard_len * p, 1.0, opt.seed + 7919 * i + 104729 * static_cast<uint64_t>(r));

    std::vector<double> t_rs, t_a2a;
    for (int t = 0; t < opt.trials; ++t) {
      reference_reduce_scatter(comm, spec);
      const double rs = comm.last_stats().elapsed();
      zip_reduce_scatter(comm, spec, opt.sigma);
      const CollectiveStats zs = comm.last_stats();
      t_rs.push_back(slowest(comm, rs));
      t_a2a.push_back(slowest(comm, zs.elapsed()));
      if (t == 0) {
        uint64_t o = zs.original_bytes, c = zs.compressed_bytes;
        if (p == 1) {
          o = 2 * spec.input.size();
          c = serialize(compress(spec.input, select_codebook(spec.input, opt.sigma))).size();
        }
        const auto os = all_gather_u64(comm, o);
        const auto cs = all_gather_u64(comm, c);
        uint64_t so = 0, sc = 0;
        for (int q = 0; q < p; ++q) {
          so += os[q];
          sc += cs[q];
        }
        original += so;
        compressed += sc;
        result.samples.push_back({static_cast<double>(2 * shard_len * p), 0.0, 0.0,
                                  static_cast<double>(sc) / static_cast<double>(so)});
      }
    }
    result.samples.back().t_rs = median(t_rs);
    result.samples.back().t_a2a = median(t_a2a);
  }

  std::vector<double> d, trs, ta2a;
  for (const auto& s : result.samples) {
    d.push_back(s.d);
    trs.push_back(s.t_rs);
    ta2a.push_back(s.t_a2a);
  }
  const LinearFit rs = fit_linear(d, trs);
  const LinearFit a2a = fit_linear(d, ta2a);
  CostModel& m = result.model;
  // Byte-weighted over all profiled payloads; the fitted slope already
  // includes it, so beta_a2a is the per-compressed-byte cost.
  m.e = std::min(1.0, static_cast<double>(compressed) / static_cast<double>(original));
  m.s = opt.s;
  m.alpha_rs = std::max(0.0, rs.alpha);
  m.beta_rs = std::max(0.0, rs.beta);
  m.alpha_a2a = std::max(0.0, a2a.alpha);
  m.beta_a2a = std::max(0.0, a2a.beta / m.e);
  m.rms_rs = rs.rms;
  m.rms_a2a = a2a.rms;
  return result;
}

}  // namespace

ProfileResult profile(Communicator& comm, const ProfileOptions& opt) {
  if (opt.trials < 1) fail(ErrorCode::kInvalidArgument, "trials must be >= 1", "trials");
  if (!(opt.s > 0.0)) fail(ErrorCode::kInvalidArgument, "s must be > 0", "s");
  std::set<uint64_t> distinct;
  for (uint64_t size : opt.sizes) {
    if (size / 2 / static_cast<uint64_t>(comm.size()) == 0) {
      fail(ErrorCode::kInvalidArgument,
           "size " + std::to_string(size) + " is smaller than one element per rank", "sizes");
    }
    distinct.insert(size / 2 / static_cast<uint64_t>(comm.size()));
  }
  if (distinct.size() < 2) {
    fail(ErrorCode::kInvalidArgument, "need at least two distinct sizes", "sizes");
  }
  try {
    return run_profile(comm, opt);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kTransport || e.code() == ErrorCode::kTimeout ||
        e.code() == ErrorCode::kProtocol) {
      fail(ErrorCode::kProfiling, "profiling failed: " + e.message(), e.field());
    }
    throw;
  }
}

std::string to_text(const CostModel& m) {
  using detail::fmt_double;
  std::string out = "# reduce-scatter cost model, seconds and bytes\n";
  out += "alpha_rs=" + fmt_double(m.alpha_rs) + "\n";
  out += "beta_rs=" + fmt_double(m.beta_rs) + "\n";
  out += "alpha_a2a=" + fmt_double(m.alpha_a2a) + "\n";
  out += "beta_a2a=" + fmt_double(m.beta_a2a) + "\n";
  out += "e=" + fmt_double(m.e) + "\n";
  out += "s=" + fmt_double(m.s) + "\n";
  out += "rms_rs=" + fmt_double(m.rms_rs) + "\n";
  out += "rms_a2a=" + fmt_double(m.rms_a2a) + "\n";
  return out;
}

CostModel parse_cost_model(std::string_view text) {
  CostModel m;
  const std::map<std::string_view, double*, std::less<>> fields{
      {"alpha_rs", &m.alpha_rs}, {"beta_rs", &m.beta_rs}, {"alpha_a2a", &m.alpha_a2a},
      {"beta_a2a", &m.beta_a2a}, {"e", &m.e},             {"s", &m.s},
      {"rms_rs", &m.rms_rs},     {"rms_a2a", &m.rms_a2a}};
  std::set<std::string_view> seen;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::kFormat, "expected key=value, got '" + std::string(line) + "'", "cost-profile");
    }
    const std::string_view key = detail::trim(line.substr(0, eq));
    const auto it = fields.find(key);
    if (it == fields.end()) fail(ErrorCode::kFormat, "unknown key", std::string(key));
    *it->second = detail::to_double(detail::trim(line.substr(eq + 1)), key);
    seen.insert(it->first);
  }
  for (const char* required : {"alpha_rs", "beta_rs", "alpha_a2a", "beta_a2a", "e", "s"}) {
    if (!seen.count(required)) fail(ErrorCode::kFormat, "missing key", required);
  }
  m.check();
  return m;
}

CostModel load_cost_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kFormat, "cannot open " + path, "cost-profile");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_cost_model(ss.str());
}

void save_cost_model(const CostModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  out << to_text(model);
  if (!out) fail(ErrorCode::kFormat, "cannot write " + path, "cost-profile");
}

AutoReduceScatterResult auto_reduce_scatter(Communicator& comm, const CostModel& model,
                                            const ReduceScatterSpec& spec, SigmaArg sigma) {
  AutoReduceScatterResult result;
  result.path = select(model, 2.0 * static_cast<double>(spec.input.size()));
  result.output = result.path == RsPath::kZipped ? zip_reduce_scatter(comm, spec, sigma)
                                                 : reference_reduce_scatter(comm, spec);
  return result;
}

}  // namespace zipcoll
