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

#include "embsim/embag/embag.h"

#include <algorithm>
#include <string>

#include "embsim/core/errors.h"

namespace embsim::embag {

using fabric::Backend;
using fabric::CollectiveKind;
using fabric::RankContext;
using fabric::Task;

std::vector<Shard> make_shards(std::span<const EmbeddingTable> tables,
                               const ShardingPlan& plan, std::uint32_t rank) {
  std::vector<Shard> shards;
  shards.reserve(tables.size());
  for (std::size_t t = 0; t < tables.size(); ++t) {
    const RowRange range = plan.range(t, rank);
    const std::uint32_t d = tables[t].dim();
    const auto all = tables[t].values();
    Shard s{range, d, {}};
    s.values.assign(all.begin() + static_cast<std::ptrdiff_t>(range.begin * d),
                    all.begin() + static_cast<std::ptrdiff_t>(range.end * d));
    shards.push_back(std::move(s));
  }
  return shards;
}

Buckets bucket_indices(const JaggedBatch& batch, const ShardingPlan& plan,
                       std::uint32_t my_rank) {
  Buckets buckets(plan.num_ranks());
  for (std::size_t t = 0; t < batch.tables.size(); ++t) {
    const TableBatch& tb = batch.tables[t];
    std::size_t pos = 0;
    for (std::size_t b = 0; b < tb.lengths.size(); ++b) {
      for (BagLength k = 0; k < tb.lengths[b]; ++k, ++pos) {
        if (pos >= tb.indices.size()) {
          throw ShapeError("table " + std::to_string(t) + ": lengths sum past the " +
                           std::to_string(tb.indices.size()) + " indices");
        }
        const RowOwner owner = plan.owner_of_row(t, tb.indices[pos]);
        buckets[owner.rank].push_back({my_rank, static_cast<std::uint32_t>(t),
                                       static_cast<std::uint32_t>(b), owner.local_row});
      }
    }
  }
  return buckets;
}

Task<Buckets> permute_indices(RankContext& ctx, Buckets buckets) {
  co_return co_await coll::all_to_all_v(ctx, std::move(buckets));
}

GatherResult gather_pool(std::span<const Shard> shards, const Buckets& received) {
  GatherResult out;
  for (std::size_t src = 0; src < received.size(); ++src) {
    for (const RoutingRecord& rec : received[src]) {
      if (rec.table_id >= shards.size() || rec.local_row >= shards[rec.table_id].num_rows()) {
        throw RoutingError("record from rank " + std::to_string(src) + " for table " +
                           std::to_string(rec.table_id) + " sample " +
                           std::to_string(rec.sample_index) + " addresses local row " +
                           std::to_string(rec.local_row) + " outside this shard");
      }
      const Shard& shard = shards[rec.table_id];
      auto [it, fresh] = out.partials.try_emplace(
          BagKey{rec.origin_rank, rec.table_id, rec.sample_index});
      if (fresh) it->second.assign(shard.dim, 0.0f);
      const auto row = shard.row(rec.local_row);
      for (std::uint32_t j = 0; j < shard.dim; ++j) it->second[j] += row[j];
      ++out.rows_touched;
    }
  }
  return out;
}

Task<PooledOutput> scatter_reduce_outputs(RankContext& ctx, const GatherResult& gathered,
                                          std::span<const TableId> tables,
                                          std::uint32_t batch_size, std::uint32_t dim) {
  const std::size_t g = ctx.size();
  const std::size_t t_count = tables.size();
  const std::size_t bag = dim;
  const std::size_t per_origin = t_count * batch_size * bag;

  std::vector<float> buffer(g * per_origin, 0.0f);
  for (const auto& [key, partial] : gathered.partials) {
    const auto [origin, table, sample] = key;
    if (origin >= g || table >= t_count || sample >= batch_size || partial.size() != bag) {
      throw RoutingError("partial bag (" + std::to_string(origin) + ", " +
                         std::to_string(table) + ", " + std::to_string(sample) +
                         ") does not fit the output layout");
    }
    std::copy(partial.begin(), partial.end(),
              buffer.begin() + static_cast<std::ptrdiff_t>(
                                   origin * per_origin + (table * batch_size + sample) * bag));
  }

  std::vector<float> mine = co_await coll::reduce_scatter<float>(ctx, buffer);

  PooledOutput out;
  out.reserve(t_count);
  for (std::size_t t = 0; t < t_count; ++t) {
    PooledMatrix m(tables[t], batch_size, dim);
    const auto first = mine.begin() + static_cast<std::ptrdiff_t>(t * batch_size * bag);
    std::copy(first, first + static_cast<std::ptrdiff_t>(batch_size * bag), m.values.begin());
    out.push_back(std::move(m));
  }
  co_return out;
}

namespace {

struct Shape {
  std::uint32_t batch_size = 0;
  std::uint32_t dim = 0;
};

Shape check_inputs(std::span<const EmbeddingTable> tables, const ShardingPlan& plan,
                   std::span<const JaggedBatch> batches) {
  if (plan.strategy() != ShardingStrategy::RowWise) {
    throw UnimplementedError("forward execution of " + std::string(to_string(plan.strategy())) +
                             " plans is not implemented; use a row-wise plan");
  }
  if (tables.empty()) throw ConfigError("embedding bag needs at least one table");
  if (plan.num_tables() != tables.size()) {
    throw ConfigError("plan covers " + std::to_string(plan.num_tables()) + " tables, got " +
                      std::to_string(tables.size()));
  }
  if (batches.size() != plan.num_ranks()) {
    throw ConfigError("plan has " + std::to_string(plan.num_ranks()) + " ranks, got " +
                      std::to_string(batches.size()) + " batches");
  }
  std::vector<std::uint64_t> rows(tables.size());
  const std::uint32_t dim = tables.front().dim();
  for (std::size_t t = 0; t < tables.size(); ++t) {
    rows[t] = tables[t].num_rows();
    if (plan.num_rows(t) != rows[t]) {
      throw ConfigError("plan row count for table " + std::to_string(t) +
                        " differs from the table's");
    }
    if (tables[t].dim() != dim) {
      throw ConfigError("all tables must share one embedding dimension");
    }
  }
  const std::size_t b = batches.front().batch_size();
  for (std::size_t r = 0; r < batches.size(); ++r) {
    if (batches[r].tables.size() != tables.size()) {
      throw ConfigError("rank " + std::to_string(r) + " batch covers " +
                        std::to_string(batches[r].tables.size()) + " tables, expected " +
                        std::to_string(tables.size()));
    }
    validate_batch(batches[r], rows);
    if (batches[r].batch_size() != b) {
      throw ConfigError("rank " + std::to_string(r) + " has batch size " +
                        std::to_string(batches[r].batch_size()) + ", rank 0 has " +
                        std::to_string(b));
    }
  }
  return {static_cast<std::uint32_t>(b), dim};
}

}  // namespace

ForwardResult embedding_bag_forward(std::span<const EmbeddingTable> tables,
                                    const ShardingPlan& plan,
                                    std::span<const JaggedBatch> batches,
                                    const ForwardOptions& options) {
  const Shape shape = check_inputs(tables, plan, batches);
  std::vector<TableId> ids;
  ids.reserve(tables.size());
  for (const auto& t : tables) ids.push_back(t.table_id());

  const fabric::GroupConfig config{plan.num_ranks(), options.backend, options.cost_model,
                                   options.scheduler};

  auto program = [&](RankContext& ctx) -> Task<RankResult> {
    const std::uint32_t rank = ctx.rank();
    const std::vector<Shard> shards = make_shards(tables, plan, rank);
    RankResult res;

    const double t0 = ctx.clock();
    Buckets buckets = bucket_indices(batches[rank], plan, rank);
    if (options.routing_hook) options.routing_hook(rank, buckets);
    const Buckets received = co_await permute_indices(ctx, std::move(buckets));
    const double t1 = ctx.clock();

    const GatherResult gathered = gather_pool(shards, received);
    ctx.advance_local(
        ctx.cost_model().gather_compute_cost(gathered.rows_touched, shape.dim, kElementBytes));
    co_await coll::barrier(ctx);
    const double t2 = ctx.clock();

    res.output = co_await scatter_reduce_outputs(ctx, gathered, ids, shape.batch_size, shape.dim);
    const double t3 = ctx.clock();

    res.times = {t1 - t0, t2 - t1, t3 - t2};
    res.rows_touched = gathered.rows_touched;
    co_return res;
  };

  auto spmd = fabric::spawn_spmd(config, program);
  return {std::move(spmd.values), std::move(spmd.trace)};
}

PhaseVolumes measure_volumes(const ShardingPlan& plan, std::uint32_t dim,
                             const std::function<JaggedBatch(std::uint32_t)>& batch_for_rank) {
  if (plan.strategy() != ShardingStrategy::RowWise) {
    throw UnimplementedError("forward execution of " + std::string(to_string(plan.strategy())) +
                             " plans is not implemented; use a row-wise plan");
  }
  const std::uint32_t g = plan.num_ranks();
  const std::size_t t_count = plan.num_tables();
  std::vector<std::uint64_t> rows(t_count);
  for (std::size_t t = 0; t < t_count; ++t) rows[t] = plan.num_rows(t);

  std::vector<std::uint64_t> received(g, 0);
  std::uint64_t max_sent = 0;
  std::size_t batch_size = 0;
  for (std::uint32_t r = 0; r < g; ++r) {
    const JaggedBatch batch = batch_for_rank(r);
    if (batch.tables.size() != t_count) {
      throw ConfigError("rank " + std::to_string(r) + " batch covers " +
                        std::to_string(batch.tables.size()) + " tables, expected " +
                        std::to_string(t_count));
    }
    validate_batch(batch, rows);
    if (r == 0) batch_size = batch.batch_size();
    if (batch.batch_size() != batch_size) {
      throw ConfigError("rank " + std::to_string(r) + " has batch size " +
                        std::to_string(batch.batch_size()) + ", rank 0 has " +
                        std::to_string(batch_size));
    }
    std::uint64_t sent = 0;
    for (std::size_t t = 0; t < t_count; ++t) {
      for (RowIndex idx : batch.tables[t].indices) ++received[plan.owner_of_row(t, idx).rank];
      sent += batch.tables[t].indices.size();
    }
    max_sent = std::max(max_sent, sent);
  }

  PhaseVolumes v;
  v.ranks = g;
  v.dim = dim;
  v.permute_count_bytes = static_cast<double>(g) * sizeof(std::uint64_t);
  v.permute_bytes = static_cast<double>(max_sent) * coll::wire_bytes_v<RoutingRecord>;
  v.max_rows_touched = *std::max_element(received.begin(), received.end());
  v.reduce_scatter_bytes = static_cast<double>(g) * static_cast<double>(t_count) *
                           static_cast<double>(batch_size) * dim * kElementBytes;
  return v;
}

PhaseTimes price_volumes(const PhaseVolumes& v, Backend backend, const fabric::CostModel& model) {
  PhaseTimes t;
  t.permute_us = model.eval_cost(backend, CollectiveKind::AllToAll, v.permute_count_bytes, v.ranks) +
                 model.eval_cost(backend, CollectiveKind::AllToAll, v.permute_bytes, v.ranks);
  t.gather_us = model.gather_compute_cost(v.max_rows_touched, v.dim, kElementBytes);
  t.reduce_scatter_us =
      model.eval_cost(backend, CollectiveKind::ReduceScatter, v.reduce_scatter_bytes, v.ranks);
  return t;
}

}  // namespace embsim::embag
