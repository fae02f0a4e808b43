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

// Row-wise sharded embedding bag forward: index all-to-all (permute),
// local gather and pool, then reduce-scatter of partial bags back to the
// ranks that asked for them.

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <tuple>
#include <vector>

#include "embsim/collectives/collectives.h"
#include "embsim/core/sharding.h"
#include "embsim/core/types.h"
#include "embsim/fabric/rank_group.h"

namespace embsim::embag {

/// Where a looked-up row must be pooled. `table_id` is the table's position
/// in the forward call, not EmbeddingTable::table_id().
struct RoutingRecord {
  std::uint32_t origin_rank = 0;
  std::uint32_t table_id = 0;
  std::uint32_t sample_index = 0;
  std::uint64_t local_row = 0;

  friend bool operator==(const RoutingRecord&, const RoutingRecord&) = default;
};

/// One bucket per destination rank.
using Buckets = std::vector<std::vector<RoutingRecord>>;

struct PhaseTimes {
  double permute_us = 0.0;
  double gather_us = 0.0;
  double reduce_scatter_us = 0.0;

  double total_us() const { return permute_us + gather_us + reduce_scatter_us; }
  friend bool operator==(const PhaseTimes&, const PhaseTimes&) = default;
};

/// One rank's slice of one table.
struct Shard {
  RowRange range;
  std::uint32_t dim = 0;
  std::vector<float> values;

  std::uint64_t num_rows() const { return range.size(); }
  std::span<const float> row(std::uint64_t local) const {
    return {values.data() + local * dim, dim};
  }
};

/// Copies rank's row range of every table. shards[t] pairs with tables[t].
std::vector<Shard> make_shards(std::span<const EmbeddingTable> tables,
                               const ShardingPlan& plan, std::uint32_t rank);

/// Routes every index of `batch` to the rank owning its row. Within a
/// bucket records are table-major, then sample, then position.
Buckets bucket_indices(const JaggedBatch& batch, const ShardingPlan& plan,
                       std::uint32_t my_rank);

/// Variable-size all-to-all of the buckets. Returns received records
/// indexed by sender.
fabric::Task<Buckets> permute_indices(fabric::RankContext& ctx, Buckets buckets);

using BagKey = std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>;  // origin, table, sample

struct GatherResult {
  std::map<BagKey, std::vector<float>> partials;
  std::uint64_t rows_touched = 0;
};

/// Sums each bag's local rows in received order (sender, then record).
/// Throws RoutingError when a record addresses a row outside its shard.
GatherResult gather_pool(std::span<const Shard> shards, const Buckets& received);

/// Dense reduce-scatter of partial bags. Rank o ends with, for every table
/// t and sample s, the rank-ordered sum of every rank's (o, t, s) partial.
/// `tables` lists the output table ids in table order.
fabric::Task<PooledOutput> scatter_reduce_outputs(
    fabric::RankContext& ctx, const GatherResult& gathered,
    std::span<const TableId> tables, std::uint32_t batch_size, std::uint32_t dim);

struct ForwardOptions {
  fabric::Backend backend = fabric::Backend::CollectiveOptimized;
  fabric::Scheduler scheduler = fabric::Scheduler::RoundRobin;
  const fabric::CostModel* cost_model = nullptr;  // null: default model
  /// Test hook run on each rank's buckets before the permute.
  std::function<void(std::uint32_t rank, Buckets&)> routing_hook;
};

struct RankResult {
  PooledOutput output;
  PhaseTimes times;
  std::uint64_t rows_touched = 0;
};

struct ForwardResult {
  std::vector<RankResult> ranks;
  std::vector<fabric::CollectiveEvent> trace;
};

/// Runs the three phases on plan.num_ranks() ranks; batches[r] is rank r's
/// input. Phase boundaries are group-synchronized, so every rank reports
/// the same PhaseTimes and gather_us is the slowest rank's gather.
///
/// Throws UnimplementedError for non-RowWise plans, ConfigError when the
/// plan does not match the tables or ranks disagree on batch size, and the
/// batch validation errors of validate_batch.
ForwardResult embedding_bag_forward(std::span<const EmbeddingTable> tables,
                                    const ShardingPlan& plan,
                                    std::span<const JaggedBatch> batches,
                                    const ForwardOptions& options = {});

/// Message sizes the forward pass puts on the wire. Bytes are per rank;
/// permute_bytes is the largest sender's payload.
struct PhaseVolumes {
  std::uint32_t ranks = 0;
  std::uint32_t dim = 0;
  double permute_count_bytes = 0.0;   // G 64-bit counts
  double permute_bytes = 0.0;         // records * 20
  std::uint64_t max_rows_touched = 0;
  double reduce_scatter_bytes = 0.0;  // G * T * B * D * 4
};

/// Count-only replay of the forward pass's routing: no embedding data
/// moves. `batch_for_rank(r)` produces rank r's batch; batches are consumed
/// one at a time so large grids stay within memory.
PhaseVolumes measure_volumes(const ShardingPlan& plan, std::uint32_t dim,
                             const std::function<JaggedBatch(std::uint32_t)>& batch_for_rank);

/// Prices measured volumes exactly as embedding_bag_forward advances its
/// clocks.
PhaseTimes price_volumes(const PhaseVolumes& volumes, fabric::Backend backend,
                         const fabric::CostModel& model);

}  // namespace embsim::embag

namespace embsim::coll {
// Three 32-bit fields and one 64-bit row, packed.
template <>
struct WireBytes<embag::RoutingRecord> {
  static constexpr std::size_t value = 3 * sizeof(std::uint32_t) + sizeof(std::uint64_t);
};
}  // namespace embsim::coll
