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

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace embsim::fabric {

/// Cost persona. CollectiveOptimized behaves like a host-launched,
/// bandwidth-tuned collective library; OneSided like device-initiated
/// put/get with very low fixed latency.
enum class Backend { CollectiveOptimized, OneSided };

enum class CollectiveKind { AllReduce, AllGather, AllToAll, Broadcast, ReduceScatter };

inline constexpr std::array<Backend, 2> kBackends = {Backend::CollectiveOptimized,
                                                     Backend::OneSided};
inline constexpr std::array<CollectiveKind, 5> kCollectiveKinds = {
    CollectiveKind::AllReduce, CollectiveKind::AllGather, CollectiveKind::AllToAll,
    CollectiveKind::Broadcast, CollectiveKind::ReduceScatter};

std::string_view to_string(Backend b);
std::string_view to_string(CollectiveKind k);
/// "collective-optimized" | "one-sided". Throws ConfigError otherwise.
Backend parse_backend(std::string_view name);
/// "all_reduce" | "all_gather" | "all_to_all" | "broadcast" | "reduce_scatter".
CollectiveKind parse_collective_kind(std::string_view name);

/// Scaling of the per-byte term with group size:
///   CollectiveOptimized all_reduce  2(G-1)/G   (ring)
///   OneSided all_reduce             G-1        (direct puts to every peer)
///   all_gather, all_to_all,
///   reduce_scatter                  (G-1)/G
///   broadcast                       1
double rank_factor(Backend backend, CollectiveKind kind, std::uint32_t ranks);

/// Latency/bandwidth parameters of one (backend, collective) pair.
///
/// t(m) = alpha + rank_factor * (m * beta + max(0, m - knee) * tail_beta)
///
/// The knee term is off unless knee_bytes is set. It models a protocol
/// switch past which the per-byte cost rises.
struct LinkParams {
  double alpha_us = 0.0;
  double beta_us_per_byte = 0.0;
  std::optional<double> knee_bytes;
  double tail_beta_us_per_byte = 0.0;
};

class CostModel {
 public:
  /// Parses the flat `key = value` calibration format. `source` names the
  /// origin in error messages. Unknown, duplicate or missing keys and
  /// out-of-range values throw ConfigError.
  static CostModel parse(std::string_view text, std::string_view source);
  /// Throws ConfigError naming the path when it cannot be read.
  static CostModel load(const std::filesystem::path& path);
  /// The calibration shipped as calibration/nvlink_h100.cal.
  static const CostModel& default_model();
  static std::string_view default_text();

  /// Every native pair must be set via set_link before use. OneSided
  /// ReduceScatter is never set: it is priced as AllToAll plus a local sum.
  CostModel() = default;

  void set_link(Backend backend, CollectiveKind kind, const LinkParams& params);
  void set_compute(double mem_bw_bytes_per_us, double kernel_overhead_us);

  bool has_link(Backend backend, CollectiveKind kind) const;
  /// Throws ConfigError when the pair has no parameters.
  const LinkParams& link(Backend backend, CollectiveKind kind) const;
  double mem_bw_bytes_per_us() const { return mem_bw_; }
  double kernel_overhead_us() const { return kernel_overhead_; }

  /// Simulated duration of one collective with `msg_bytes` per rank.
  double eval_cost(Backend backend, CollectiveKind kind, double msg_bytes,
                   std::uint32_t ranks) const;
  /// Gather + pool kernel: kernel_overhead + rows * dim * element_bytes / bw.
  double gather_compute_cost(std::uint64_t rows_touched, std::uint32_t dim,
                             std::uint32_t element_bytes) const;
  /// Streaming local reduction over `bytes` of input, with no launch
  /// overhead (fused into the receiving kernel).
  double local_reduce_cost(double bytes) const;

  /// Serializes back to the calibration format. parse(to_text()) == *this.
  std::string to_text() const;

  friend bool operator==(const CostModel& a, const CostModel& b);

 private:
  static constexpr std::size_t index(Backend b, CollectiveKind k) {
    return static_cast<std::size_t>(b) * kCollectiveKinds.size() +
           static_cast<std::size_t>(k);
  }

  std::array<std::optional<LinkParams>, 10> links_{};
  double mem_bw_ = 1.0;
  double kernel_overhead_ = 0.0;
};

bool operator==(const LinkParams& a, const LinkParams& b);

}  // namespace embsim::fabric
