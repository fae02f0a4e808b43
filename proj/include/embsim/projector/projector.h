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

// Local-versus-distributed speedup projection for tables that overflow one
// device's memory.

#include <cstdint>
#include <span>
#include <vector>

#include "embsim/embag/embag.h"
#include "embsim/fabric/cost_model.h"

namespace embsim::projector {

inline constexpr std::uint64_t kGiB = std::uint64_t{1} << 30;
inline constexpr std::uint64_t kTiB = std::uint64_t{1} << 40;
/// One 80 GB device, in binary units so 10 TiB needs exactly 128 of them.
inline constexpr std::uint64_t kDefaultHbmBytes = 80 * kGiB;

struct Workload {
  std::uint32_t batch = 0;
  std::uint32_t tables = 0;
  std::uint32_t pooling = 0;
  std::uint32_t dim = 0;
};

struct ProjectionConfig {
  std::uint64_t table_bytes = 0;
  std::uint64_t hbm_bytes_per_gpu = kDefaultHbmBytes;
  Workload workload;
  std::uint32_t element_bytes = 4;
  std::uint32_t index_bytes = 8;
  fabric::Backend backend = fabric::Backend::CollectiveOptimized;
};

struct MessageSizes {
  std::uint64_t index_bytes = 0;   // B * T * P * index_bytes
  std::uint64_t output_bytes = 0;  // B * T * D * element_bytes
};

struct ProjectionResult {
  std::uint32_t gpus_required = 0;
  double local_us = 0.0;
  double distributed_us = 0.0;
  double speedup = 0.0;  // distributed_us / local_us
  embag::PhaseTimes breakdown;
  MessageSizes messages;
};

/// ceil(table_bytes / hbm_bytes_per_gpu). Throws ConfigError on zero
/// arguments or when the count does not fit in 32 bits.
std::uint32_t gpus_required(std::uint64_t table_bytes, std::uint64_t hbm_bytes_per_gpu);

MessageSizes message_sizes(const ProjectionConfig& config);

/// local = gather(B*T*P rows); distributed = all_to_all(index bytes) +
/// gather(B*T*P rows) + reduce_scatter(output bytes), all on G ranks.
/// Throws ConfigError for non-positive workload fields or element_bytes != 4.
ProjectionResult project(const ProjectionConfig& config, const fabric::CostModel& model);

struct ProjectionRow {
  ProjectionConfig config;
  ProjectionResult result;
};

/// One row per (table size, workload), table-size-major.
std::vector<ProjectionRow> projection_sweep(std::span<const std::uint64_t> table_bytes,
                                            std::span<const Workload> workloads,
                                            const fabric::CostModel& model,
                                            std::uint64_t hbm_bytes_per_gpu = kDefaultHbmBytes);

}  // namespace embsim::projector
