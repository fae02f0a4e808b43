// Copyright 2026 The embsim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "embsim/fabric/cost_model.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "embsim/core/errors.h"

namespace embsim::fabric {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string link_prefix(Backend b, CollectiveKind k) {
  return std::string(to_string(b)) + "." + std::string(to_string(k)) + ".";
}

constexpr std::string_view kMemBwKey = "compute.mem_bw_bytes_per_us";
constexpr std::string_view kOverheadKey = "compute.kernel_overhead_us";

bool composed(Backend b, CollectiveKind k) {
  return b == Backend::OneSided && k == CollectiveKind::ReduceScatter;
}

}  // namespace

std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::CollectiveOptimized: return "collective-optimized";
    case Backend::OneSided: return "one-sided";
  }
  return "unknown";
}

std::string_view to_string(CollectiveKind k) {
  switch (k) {
    case CollectiveKind::AllReduce: return "all_reduce";
    case CollectiveKind::AllGather: return "all_gather";
    case CollectiveKind::AllToAll: return "all_to_all";
    case CollectiveKind::Broadcast: return "broadcast";
    case CollectiveKind::ReduceScatter: return "reduce_scatter";
  }
  return "unknown";
}

Backend parse_backend(std::string_view name) {
  for (Backend b : kBackends) {
    if (to_string(b) == name) return b;
  }
  throw ConfigError("unknown backend '" + std::string(name) +
                    "' (expected collective-optimized or one-sided)");
}

CollectiveKind parse_collective_kind(std::string_view name) {
  for (CollectiveKind k : kCollectiveKinds) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown collective kind '" + std::string(name) + "'");
}

double rank_factor(Backend backend, CollectiveKind kind, std::uint32_t ranks) {
  if (ranks == 0) throw ConfigError("rank_factor: group size must be positive");
  const double g = ranks;
  switch (kind) {
    case CollectiveKind::Broadcast:
      return 1.0;
    case CollectiveKind::AllReduce:
      return backend == Backend::CollectiveOptimized ? 2.0 * (g - 1.0) / g
                                                     : g - 1.0;
    case CollectiveKind::AllGather:
    case CollectiveKind::AllToAll:
    case CollectiveKind::ReduceScatter:
      return (g - 1.0) / g;
  }
  throw ConfigError("rank_factor: unknown collective kind");
}

bool operator==(const LinkParams& a, const LinkParams& b) {
  return a.alpha_us == b.alpha_us && a.beta_us_per_byte == b.beta_us_per_byte &&
         a.knee_bytes == b.knee_bytes &&
         a.tail_beta_us_per_byte == b.tail_beta_us_per_byte;
}

bool operator==(const CostModel& a, const CostModel& b) {
  return a.links_ == b.links_ && a.mem_bw_ == b.mem_bw_ &&
         a.kernel_overhead_ == b.kernel_overhead_;
}

void CostModel::set_link(Backend backend, CollectiveKind kind,
                         const LinkParams& p) {
  const std::string where = link_prefix(backend, kind);
  if (composed(backend, kind)) {
    throw ConfigError(where + "*: one-sided reduce_scatter is composed from "
                      "all_to_all and takes no parameters");
  }
  if (!(std::isfinite(p.alpha_us) && p.alpha_us >= 0.0)) {
    throw ConfigError(where + "alpha_us must be finite and >= 0");
  }
  if (!(std::isfinite(p.beta_us_per_byte) && p.beta_us_per_byte > 0.0)) {
    throw ConfigError(where + "beta_us_per_byte must be finite and > 0");
  }
  if (p.knee_bytes && !(std::isfinite(*p.knee_bytes) && *p.knee_bytes >= 0.0)) {
    throw ConfigError(where + "knee_bytes must be finite and >= 0");
  }
  if (!(std::isfinite(p.tail_beta_us_per_byte) && p.tail_beta_us_per_byte >= 0.0)) {
    throw ConfigError(where + "tail_beta_us_per_byte must be finite and >= 0");
  }
  if (!p.knee_bytes && p.tail_beta_us_per_byte != 0.0) {
    throw ConfigError(where + "tail_beta_us_per_byte requires knee_bytes");
  }
  links_[index(backend, kind)] = p;
}

void CostModel::set_compute(double mem_bw_bytes_per_us,
                            double kernel_overhead_us) {
  if (!(std::isfinite(mem_bw_bytes_per_us) && mem_bw_bytes_per_us > 0.0)) {
    throw ConfigError(std::string(kMemBwKey) + " must be finite and > 0");
  }
  if (!(std::isfinite(kernel_overhead_us) && kernel_overhead_us >= 0.0)) {
    throw ConfigError(std::string(kOverheadKey) + " must be finite and >= 0");
  }
  mem_bw_ = mem_bw_bytes_per_us;
  kernel_overhead_ = kernel_overhead_us;
}

bool CostModel::has_link(Backend backend, CollectiveKind kind) const {
  return links_[index(backend, kind)].has_value();
}

const LinkParams& CostModel::link(Backend backend, CollectiveKind kind) const {
  const auto& p = links_[index(backend, kind)];
  if (!p) {
    throw ConfigError("cost model has no parameters for " +
                      link_prefix(backend, kind) + "*");
  }
  return *p;
}

double CostModel::eval_cost(Backend backend, CollectiveKind kind,
                            double msg_bytes, std::uint32_t ranks) const {
  if (!(msg_bytes >= 0.0)) throw ConfigError("eval_cost: msg_bytes must be >= 0");
  if (ranks == 0) throw ConfigError("eval_cost: group size must be positive");
  if (composed(backend, kind)) {
    return eval_cost(backend, CollectiveKind::AllToAll, msg_bytes, ranks) +
           local_reduce_cost(msg_bytes);
  }
  const LinkParams& p = link(backend, kind);
  double per_byte = msg_bytes * p.beta_us_per_byte;
  if (p.knee_bytes && msg_bytes > *p.knee_bytes) {
    per_byte += (msg_bytes - *p.knee_bytes) * p.tail_beta_us_per_byte;
  }
  return p.alpha_us + rank_factor(backend, kind, ranks) * per_byte;
}

double CostModel::gather_compute_cost(std::uint64_t rows_touched,
                                      std::uint32_t dim,
                                      std::uint32_t element_bytes) const {
  const double bytes = static_cast<double>(rows_touched) * dim * element_bytes;
  return kernel_overhead_ + bytes / mem_bw_;
}

double CostModel::local_reduce_cost(double bytes) const { return bytes / mem_bw_; }

CostModel CostModel::parse(std::string_view text, std::string_view source) {
  const std::string src(source);
  std::map<std::string, double, std::less<>> values;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line(raw);
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = src + ":" + std::to_string(lineno);
    if (eq == std::string_view::npos) {
      throw ConfigError(where + ": expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view val = trim(line.substr(eq + 1));
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
    if (val.empty() || ec != std::errc() || ptr != val.data() + val.size()) {
      throw ConfigError(where + ": value of '" + key + "' is not a number");
    }
    if (!values.emplace(key, v).second) {
      throw ConfigError(where + ": duplicate key '" + key + "'");
    }
  }

  CostModel model;
  auto take = [&](const std::string& key) -> std::optional<double> {
    auto it = values.find(key);
    if (it == values.end()) return std::nullopt;
    double v = it->second;
    values.erase(it);
    return v;
  };
  auto require = [&](const std::string& key) {
    auto v = take(key);
    if (!v) throw ConfigError(src + ": missing key '" + key + "'");
    return *v;
  };

  for (Backend b : kBackends) {
    for (CollectiveKind k : kCollectiveKinds) {
      if (composed(b, k)) continue;
      const std::string prefix = link_prefix(b, k);
      LinkParams p;
      p.alpha_us = require(prefix + "alpha_us");
      p.beta_us_per_byte = require(prefix + "beta_us_per_byte");
      p.knee_bytes = take(prefix + "knee_bytes");
      auto tail = take(prefix + "tail_beta_us_per_byte");
      if (p.knee_bytes.has_value() != tail.has_value()) {
        throw ConfigError(src + ": " + prefix +
                          "knee_bytes and tail_beta_us_per_byte must be given "
                          "together");
      }
      p.tail_beta_us_per_byte = tail.value_or(0.0);
      try {
        model.set_link(b, k, p);
      } catch (const ConfigError& e) {
        throw ConfigError(src + ": " + e.what());
      }
    }
  }
  const double bw = require(std::string(kMemBwKey));
  const double overhead = require(std::string(kOverheadKey));
  try {
    model.set_compute(bw, overhead);
  } catch (const ConfigError& e) {
    throw ConfigError(src + ": " + e.what());
  }
  if (!values.empty()) {
    throw ConfigError(src + ": unknown key '" + values.begin()->first + "'");
  }
  return model;
}

CostModel CostModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot read calibration file '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

const CostModel& CostModel::default_model() {
  static const CostModel model = parse(default_text(), "<default calibration>");
  return model;
}

std::string CostModel::to_text() const {
  std::string out;
  for (Backend b : kBackends) {
    for (CollectiveKind k : kCollectiveKinds) {
      const auto& p = links_[index(b, k)];
      if (!p) continue;
      const std::string prefix = link_prefix(b, k);
      out += prefix + "alpha_us = " + format_double(p->alpha_us) + "\n";
      out += prefix + "beta_us_per_byte = " + format_double(p->beta_us_per_byte) + "\n";
      if (p->knee_bytes) {
        out += prefix + "knee_bytes = " + format_double(*p->knee_bytes) + "\n";
        out += prefix + "tail_beta_us_per_byte = " +
               format_double(p->tail_beta_us_per_byte) + "\n";
      }
    }
  }
  out += std::string(kMemBwKey) + " = " + format_double(mem_bw_) + "\n";
  out += std::string(kOverheadKey) + " = " + format_double(kernel_overhead_) + "\n";
  return out;
}

}  // namespace embsim::fabric
