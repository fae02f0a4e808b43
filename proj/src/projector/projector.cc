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

#include "embsim/projector/projector.h"

#include <limits>
#include <string>

#include "embsim/core/errors.h"

namespace embsim::projector {

using fabric::CollectiveKind;

std::uint32_t gpus_required(std::uint64_t table_bytes, std::uint64_t hbm_bytes_per_gpu) {
  if (table_bytes == 0 || hbm_bytes_per_gpu == 0) {
    throw ConfigError("table size and device memory must both be positive");
  }
  const std::uint64_t g = table_bytes / hbm_bytes_per_gpu +
                          (table_bytes % hbm_bytes_per_gpu != 0 ? 1 : 0);
  if (g > std::numeric_limits<std::uint32_t>::max()) {
    throw ConfigError("table needs " + std::to_string(g) + " devices, too many to model");
  }
  return static_cast<std::uint32_t>(g);
}

MessageSizes message_sizes(const ProjectionConfig& c) {
  const Workload& w = c.workload;
  const std::uint64_t bt = std::uint64_t{w.batch} * w.tables;
  return {bt * w.pooling * c.index_bytes, bt * w.dim * c.element_bytes};
}

ProjectionResult project(const ProjectionConfig& c, const fabric::CostModel& model) {
  const Workload& w = c.workload;
  if (w.batch == 0 || w.tables == 0 || w.pooling == 0 || w.dim == 0) {
    throw ConfigError("projection workload fields must all be positive");
  }
  if (c.element_bytes != 4) throw ConfigError("only 4-byte (fp32) elements are modeled");
  if (c.index_bytes == 0) throw ConfigError("index width must be positive");

  ProjectionResult r;
  r.gpus_required = gpus_required(c.table_bytes, c.hbm_bytes_per_gpu);
  r.messages = message_sizes(c);
  const std::uint64_t rows = std::uint64_t{w.batch} * w.tables * w.pooling;
  const double gather = model.gather_compute_cost(rows, w.dim, c.element_bytes);
  r.breakdown.permute_us = model.eval_cost(c.backend, CollectiveKind::AllToAll,
                                           static_cast<double>(r.messages.index_bytes),
                                           r.gpus_required);
  r.breakdown.gather_us = gather;
  r.breakdown.reduce_scatter_us = model.eval_cost(c.backend, CollectiveKind::ReduceScatter,
                                                  static_cast<double>(r.messages.output_bytes),
                                                  r.gpus_required);
  r.local_us = gather;
  r.distributed_us = r.breakdown.total_us();
  r.speedup = r.distributed_us / r.local_us;
  return r;
}

std::vector<ProjectionRow> projection_sweep(std::span<const std::uint64_t> table_bytes,
                                            std::span<const Workload> workloads,
                                            const fabric::CostModel& model,
                                            std::uint64_t hbm_bytes_per_gpu) {
  if (table_bytes.empty() || workloads.empty()) {
    throw ConfigError("projection sweep needs at least one table size and one workload");
  }
  std::vector<ProjectionRow> rows;
  rows.reserve(table_bytes.size() * workloads.size());
  for (std::uint64_t size : table_bytes) {
    for (const Workload& w : workloads) {
      ProjectionConfig c;
      c.table_bytes = size;
      c.hbm_bytes_per_gpu = hbm_bytes_per_gpu;
      c.workload = w;
      rows.push_back({c, project(c, model)});
    }
  }
  return rows;
}

}  // namespace embsim::projector
