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

#include <algorithm>
#include <cstring>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include <gtest/gtest.h>

#include "embsim/core/errors.h"
#include "embsim/core/oracle.h"
#include "embsim/core/synth.h"
#include "embsim/embag/embag.h"
#include "support/reference.h"

namespace embsim::embag {
namespace {

using fabric::Backend;
using fabric::CostModel;
using fabric::GroupConfig;
using fabric::RankContext;
using fabric::Scheduler;
using fabric::spawn_spmd;
using fabric::Task;

struct Instance {
  std::vector<EmbeddingTable> tables;
  std::vector<std::uint64_t> rows;
  std::vector<JaggedBatch> batches;
  ShardingPlan plan;
};

Instance make_instance(std::uint64_t seed, std::uint32_t g, std::uint32_t t, std::uint64_t r,
                       std::uint32_t d, std::uint32_t b, std::uint32_t p,
                       PoolingMode mode = PoolingMode::Variable) {
  std::vector<std::uint64_t> rows(t, r);
  std::vector<JaggedBatch> batches;
  for (std::uint32_t k = 0; k < g; ++k) batches.push_back(synth_batch(seed + 1, k, b, rows, p, mode));
  return {synth_tables(seed, t, r, d), rows, std::move(batches), ShardingPlan::row_wise(rows, g)};
}

std::vector<float> flat_values(const EmbeddingTable& t) {
  return {t.values().begin(), t.values().end()};
}

TEST(BucketTest, SingleRankKeepsGlobalRows) {
  const auto inst = make_instance(1, 1, 2, 50, 4, 6, 5);
  const auto buckets = bucket_indices(inst.batches[0], inst.plan, 0);
  ASSERT_EQ(buckets.size(), 1u);
  std::size_t k = 0;
  for (std::uint32_t t = 0; t < 2; ++t) {
    for (RowIndex idx : inst.batches[0].tables[t].indices) {
      EXPECT_EQ(buckets[0][k].local_row, idx);
      EXPECT_EQ(buckets[0][k].table_id, t);
      ++k;
    }
  }
  EXPECT_EQ(k, buckets[0].size());
}

TEST(BucketTest, SplitsByOwner) {
  JaggedBatch batch;
  batch.tables.push_back({0, {14, 29}, {2}});
  const std::vector<std::uint64_t> rows{32};
  const auto plan = ShardingPlan::row_wise(rows, 2);
  const auto buckets = bucket_indices(batch, plan, 1);
  ASSERT_EQ(buckets[0].size(), 1u);
  ASSERT_EQ(buckets[1].size(), 1u);
  EXPECT_EQ(buckets[0][0], (RoutingRecord{1, 0, 0, 14}));
  EXPECT_EQ(buckets[1][0], (RoutingRecord{1, 0, 0, 13}));
}

TEST(BucketTest, ConservesIndicesInTableSamplePositionOrder) {
  const auto inst = make_instance(4, 4, 3, 97, 4, 20, 9);
  for (std::uint32_t k = 0; k < 4; ++k) {
    const auto buckets = bucket_indices(inst.batches[k], inst.plan, k);
    std::size_t total = 0;
    for (std::uint32_t dst = 0; dst < 4; ++dst) {
      total += buckets[dst].size();
      for (std::size_t i = 1; i < buckets[dst].size(); ++i) {
        const auto& a = buckets[dst][i - 1];
        const auto& b = buckets[dst][i];
        EXPECT_LE(std::tie(a.table_id, a.sample_index), std::tie(b.table_id, b.sample_index));
      }
      for (const auto& rec : buckets[dst]) {
        EXPECT_LT(rec.local_row, inst.plan.range(rec.table_id, dst).size());
        EXPECT_EQ(rec.origin_rank, k);
      }
    }
    EXPECT_EQ(total, inst.batches[k].total_indices());
  }
}

TEST(BucketTest, InvalidIndexPropagates) {
  JaggedBatch batch;
  batch.tables.push_back({0, {40}, {1}});
  const std::vector<std::uint64_t> rows{32};
  EXPECT_THROW(bucket_indices(batch, ShardingPlan::row_wise(rows, 2), 0), OutOfRangeError);
}

TEST(PermuteTest, PreservesGlobalMultiset) {
  const auto inst = make_instance(8, 2, 2, 64, 4, 16, 6);
  using Key = std::tuple<std::uint32_t, std::uint32_t, std::uint32_t, std::uint64_t>;
  std::multiset<Key> sent;
  for (std::uint32_t k = 0; k < 2; ++k) {
    for (std::uint32_t t = 0; t < 2; ++t) {
      const auto& tb = inst.batches[k].tables[t];
      std::size_t pos = 0;
      for (std::uint32_t s = 0; s < tb.lengths.size(); ++s) {
        for (BagLength n = 0; n < tb.lengths[s]; ++n) sent.insert({k, t, s, tb.indices[pos++]});
      }
    }
  }
  auto res = spawn_spmd(GroupConfig{2}, [&](RankContext& ctx) -> Task<Buckets> {
    co_return co_await permute_indices(ctx, bucket_indices(inst.batches[ctx.rank()], inst.plan, ctx.rank()));
  });
  std::multiset<Key> received;
  for (std::uint32_t dst = 0; dst < 2; ++dst) {
    for (std::uint32_t src = 0; src < 2; ++src) {
      for (const auto& rec : res.values[dst][src]) {
        EXPECT_EQ(rec.origin_rank, src);
        received.insert({rec.origin_rank, rec.table_id, rec.sample_index,
                         rec.local_row + inst.plan.range(rec.table_id, dst).begin});
      }
    }
  }
  EXPECT_EQ(sent, received);
}

TEST(PermuteTest, EmptyBatchReceivesNothing) {
  JaggedBatch empty;
  empty.tables.push_back({0, {}, {0, 0}});
  const std::vector<std::uint64_t> rows{10};
  const auto plan = ShardingPlan::row_wise(rows, 3);
  auto res = spawn_spmd(GroupConfig{3}, [&](RankContext& ctx) -> Task<std::size_t> {
    auto got = co_await permute_indices(ctx, bucket_indices(empty, plan, ctx.rank()));
    std::size_t n = 0;
    for (const auto& c : got) n += c.size();
    co_return n;
  });
  EXPECT_EQ(res.values, (std::vector<std::size_t>{0, 0, 0}));
}

TEST(PermuteTest, SingleRankCostIsCountExchangePlusAlpha) {
  const auto inst = make_instance(2, 1, 1, 20, 4, 5, 3);
  const auto& m = CostModel::default_model();
  auto res = spawn_spmd(GroupConfig{1}, [&](RankContext& ctx) -> Task<Buckets> {
    co_return co_await permute_indices(ctx, bucket_indices(inst.batches[0], inst.plan, 0));
  });
  EXPECT_EQ(res.values[0][0], bucket_indices(inst.batches[0], inst.plan, 0)[0]);
  const double alpha = m.link(Backend::CollectiveOptimized, fabric::CollectiveKind::AllToAll).alpha_us;
  EXPECT_EQ(res.clocks[0], 2 * alpha);
}

TEST(GatherTest, SingleRecordIsTheShardRow) {
  const auto inst = make_instance(3, 2, 1, 10, 5, 1, 1);
  const auto shards = make_shards(inst.tables, inst.plan, 1);
  Buckets received(2);
  received[0].push_back({0, 0, 0, 2});
  const auto g = gather_pool(shards, received);
  ASSERT_EQ(g.partials.size(), 1u);
  EXPECT_EQ(g.rows_touched, 1u);
  const auto want = inst.tables[0].row(5 + 2);
  const auto& got = g.partials.at({0, 0, 0});
  EXPECT_TRUE(std::equal(got.begin(), got.end(), want.begin()));
}

TEST(GatherTest, NoRecordsNoPartials) {
  const auto inst = make_instance(3, 2, 1, 10, 5, 1, 1);
  const auto g = gather_pool(make_shards(inst.tables, inst.plan, 0), Buckets(2));
  EXPECT_TRUE(g.partials.empty());
  EXPECT_EQ(g.rows_touched, 0u);
}

TEST(GatherTest, MatchesPerShardBruteForce) {
  const auto inst = make_instance(12, 3, 2, 40, 6, 10, 7);
  for (std::uint32_t me = 0; me < 3; ++me) {
    Buckets received(3);
    for (std::uint32_t k = 0; k < 3; ++k) received[k] = bucket_indices(inst.batches[k], inst.plan, k)[me];
    const auto got = gather_pool(make_shards(inst.tables, inst.plan, me), received);
    // Brute force: for each bag, collect the global rows this rank owns.
    std::map<BagKey, std::vector<double>> want;
    for (std::uint32_t k = 0; k < 3; ++k) {
      for (std::uint32_t t = 0; t < 2; ++t) {
        const auto& tb = inst.batches[k].tables[t];
        std::size_t pos = 0;
        for (std::uint32_t s = 0; s < tb.lengths.size(); ++s) {
          for (BagLength n = 0; n < tb.lengths[s]; ++n, ++pos) {
            const RowIndex row = tb.indices[pos];
            if (testing::brute_owner(40, 3, row).rank != me) continue;
            auto& acc = want[{k, t, s}];
            acc.resize(6, 0.0);
            for (std::uint32_t j = 0; j < 6; ++j) acc[j] += inst.tables[t].row(row)[j];
          }
        }
      }
    }
    ASSERT_EQ(got.partials.size(), want.size());
    for (const auto& [key, acc] : want) {
      const auto& p = got.partials.at(key);
      for (std::uint32_t j = 0; j < 6; ++j) EXPECT_NEAR(p[j], acc[j], 1e-5 * std::max(1.0, std::fabs(acc[j])));
    }
  }
}

TEST(GatherTest, OutOfShardRowIsRoutingError) {
  const auto inst = make_instance(3, 2, 1, 10, 5, 1, 1);
  Buckets received(2);
  received[1].push_back({1, 0, 0, 5});  // shard 0 holds rows [0, 5)
  EXPECT_THROW(gather_pool(make_shards(inst.tables, inst.plan, 0), received), RoutingError);
  received[1][0] = {1, 3, 0, 0};  // no such table
  EXPECT_THROW(gather_pool(make_shards(inst.tables, inst.plan, 0), received), RoutingError);
}

TEST(ScatterReduceTest, SingleRankIsVerbatim) {
  GatherResult g;
  g.partials[{0, 0, 1}] = {1.5f, -2.0f};
  g.partials[{0, 1, 0}] = {3.0f, 4.0f};
  const std::vector<TableId> ids{10, 11};
  auto res = spawn_spmd(GroupConfig{1}, [&](RankContext& ctx) -> Task<PooledOutput> {
    co_return co_await scatter_reduce_outputs(ctx, g, ids, 2, 2);
  });
  const auto& out = res.values[0];
  EXPECT_EQ(out[0].table_id, 10u);
  EXPECT_EQ(out[0].values, (std::vector<float>{0, 0, 1.5f, -2.0f}));
  EXPECT_EQ(out[1].values, (std::vector<float>{3, 4, 0, 0}));
}

TEST(ScatterReduceTest, SumsHalvesHeldByTwoRanks) {
  std::vector<GatherResult> per_rank(2);
  per_rank[0].partials[{1, 0, 0}] = {1.0f, 2.0f};
  per_rank[1].partials[{1, 0, 0}] = {10.0f, 20.0f};
  per_rank[1].partials[{0, 0, 0}] = {5.0f, 5.0f};
  const std::vector<TableId> ids{0};
  for (Backend b : {Backend::CollectiveOptimized, Backend::OneSided}) {
    auto res = spawn_spmd(GroupConfig{2, b}, [&](RankContext& ctx) -> Task<PooledOutput> {
      co_return co_await scatter_reduce_outputs(ctx, per_rank[ctx.rank()], ids, 1, 2);
    });
    EXPECT_EQ(res.values[0][0].values, (std::vector<float>{5, 5}));
    EXPECT_EQ(res.values[1][0].values, (std::vector<float>{11, 22}));
  }
}

// Brute-force expected output for rank k's batch with an fp64 accumulator.
void expect_matches_brute_force(const Instance& inst, const ForwardResult& res, double tol) {
  for (std::uint32_t k = 0; k < inst.batches.size(); ++k) {
    for (std::size_t t = 0; t < inst.tables.size(); ++t) {
      const auto& tb = inst.batches[k].tables[t];
      const auto vals = flat_values(inst.tables[t]);
      const auto d = inst.tables[t].dim();
      const auto want = testing::brute_force_bag(vals, d, tb.indices, tb.lengths);
      const auto mag = testing::brute_force_magnitude(vals, d, tb.indices, tb.lengths);
      const auto& got = res.ranks[k].output[t].values;
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t i = 0; i < want.size(); ++i) {
        ASSERT_LE(testing::relative_error(got[i], want[i], mag[i]), tol)
            << "rank " << k << " table " << t << " element " << i;
      }
    }
  }
}

TEST(ForwardTest, SingleRankIsBitExact) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = make_instance(seed, 1, 3, 100 + seed, 7, 12, 9);
    const auto res = embedding_bag_forward(inst.tables, inst.plan, inst.batches);
    const auto want = oracle_embedding_bag(inst.tables, inst.batches[0]);
    for (std::size_t t = 0; t < 3; ++t) {
      ASSERT_EQ(std::memcmp(res.ranks[0].output[t].values.data(), want[t].values.data(),
                            want[t].values.size() * sizeof(float)),
                0);
    }
  }
}

TEST(ForwardTest, MultiRankMatchesBruteForce) {
  for (std::uint32_t g : {2u, 4u, 8u}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto inst = make_instance(seed * 31 + g, g, 1 + seed % 4, 64 + 13 * seed, 3 + seed, 9, 12);
      expect_matches_brute_force(inst, embedding_bag_forward(inst.tables, inst.plan, inst.batches), 1e-5);
    }
  }
}

TEST(ForwardTest, LengthsExampleHoldsForEveryGroupSize) {
  std::vector<float> v(32 * 3);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = float(i % 17) - 8.0f;
  const std::vector<EmbeddingTable> tables{EmbeddingTable(0, 32, 3, v)};
  JaggedBatch batch;
  batch.tables.push_back({0, {14, 29, 12, 6, 13, 10, 8, 2}, {2, 1, 0, 3, 2}});
  const auto want = oracle_embedding_bag(tables, batch);
  const std::vector<std::uint64_t> rows{32};
  for (std::uint32_t g : {1u, 2u, 4u, 8u}) {
    const std::vector<JaggedBatch> batches(g, batch);
    const auto res = embedding_bag_forward(tables, ShardingPlan::row_wise(rows, g), batches);
    for (std::uint32_t k = 0; k < g; ++k) EXPECT_EQ(res.ranks[k].output[0].values, want[0].values);
  }
}

TEST(ForwardTest, NonRowWisePlansAreUnimplemented) {
  const auto inst = make_instance(0, 2, 1, 10, 2, 2, 2);
  const ShardingPlan tw(ShardingStrategy::TableWise, 2, {{{0, 10}, {10, 10}}});
  EXPECT_THROW(embedding_bag_forward(inst.tables, tw, inst.batches), UnimplementedError);
  const ShardingPlan cw(ShardingStrategy::ColumnWise, 2, {{{0, 5}, {5, 10}}});
  EXPECT_THROW(embedding_bag_forward(inst.tables, cw, inst.batches), UnimplementedError);
}

TEST(ForwardTest, RejectsMismatchedInputs) {
  auto inst = make_instance(0, 2, 1, 10, 2, 2, 2);
  std::vector<JaggedBatch> one{inst.batches[0]};
  EXPECT_THROW(embedding_bag_forward(inst.tables, inst.plan, one), ConfigError);
  auto uneven = inst.batches;
  uneven[1].tables[0].lengths.push_back(0);
  EXPECT_THROW(embedding_bag_forward(inst.tables, inst.plan, uneven), ConfigError);
  auto bad = inst.batches;
  bad[1].tables[0].indices.push_back(10);
  bad[1].tables[0].lengths.back() += 1;
  EXPECT_THROW(embedding_bag_forward(inst.tables, inst.plan, bad), OutOfRangeError);
}

TEST(ForwardTest, BackendsAndSchedulersAgreeExactly) {
  const auto inst = make_instance(21, 4, 3, 200, 16, 24, 10);
  ForwardResult first;
  bool have = false;
  for (Backend b : {Backend::CollectiveOptimized, Backend::OneSided}) {
    for (Scheduler s : {Scheduler::RoundRobin, Scheduler::Concurrent}) {
      ForwardOptions opts;
      opts.backend = b;
      opts.scheduler = s;
      auto res = embedding_bag_forward(inst.tables, inst.plan, inst.batches, opts);
      if (!have) {
        first = std::move(res);
        have = true;
        continue;
      }
      for (std::uint32_t k = 0; k < 4; ++k) {
        for (std::size_t t = 0; t < 3; ++t) {
          EXPECT_EQ(res.ranks[k].output[t].values, first.ranks[k].output[t].values);
        }
      }
    }
  }
}

TEST(ForwardTest, SchedulersGiveIdenticalTimes) {
  const auto inst = make_instance(5, 8, 2, 500, 8, 16, 6);
  for (Backend b : {Backend::CollectiveOptimized, Backend::OneSided}) {
    ForwardOptions rr, cc;
    rr.backend = cc.backend = b;
    cc.scheduler = Scheduler::Concurrent;
    const auto x = embedding_bag_forward(inst.tables, inst.plan, inst.batches, rr);
    const auto y = embedding_bag_forward(inst.tables, inst.plan, inst.batches, cc);
    for (std::uint32_t k = 0; k < 8; ++k) EXPECT_EQ(x.ranks[k].times, y.ranks[k].times);
  }
}

TEST(ForwardTest, ShardingDoesNotChangeResultsBeyondRounding) {
  const std::uint32_t t = 2;
  const std::uint64_t r = 256;
  const auto tables = synth_tables(77, t, r, 12);
  const std::vector<std::uint64_t> rows(t, r);
  // The same eight bags, spread over G ranks (8 / G bags per rank).
  const auto global = synth_batch(78, 0, 8, rows, 10, PoolingMode::Variable);
  std::vector<PooledOutput> per_g;
  for (std::uint32_t g : {1u, 2u, 4u, 8u}) {
    const std::uint32_t per = 8 / g;
    std::vector<JaggedBatch> batches(g);
    for (std::uint32_t k = 0; k < g; ++k) {
      for (std::uint32_t tt = 0; tt < t; ++tt) {
        const auto& src = global.tables[tt];
        const auto off = src.offsets();
        TableBatch tb{tt, {}, {}};
        for (std::uint32_t s = k * per; s < (k + 1) * per; ++s) {
          tb.lengths.push_back(src.lengths[s]);
          tb.indices.insert(tb.indices.end(), src.indices.begin() + off[s], src.indices.begin() + off[s + 1]);
        }
        batches[k].tables.push_back(std::move(tb));
      }
    }
    const auto res = embedding_bag_forward(tables, ShardingPlan::row_wise(rows, g), batches);
    PooledOutput joined;
    for (std::uint32_t tt = 0; tt < t; ++tt) {
      PooledMatrix m(tables[tt].table_id(), 8, 12);
      for (std::uint32_t k = 0; k < g; ++k) {
        std::copy(res.ranks[k].output[tt].values.begin(), res.ranks[k].output[tt].values.end(),
                  m.values.begin() + k * per * 12);
      }
      joined.push_back(std::move(m));
    }
    per_g.push_back(std::move(joined));
  }
  for (std::size_t i = 1; i < per_g.size(); ++i) {
    for (std::uint32_t tt = 0; tt < t; ++tt) {
      const auto vals = flat_values(tables[tt]);
      const auto mag = testing::brute_force_magnitude(vals, 12, global.tables[tt].indices, global.tables[tt].lengths);
      for (std::size_t e = 0; e < per_g[0][tt].values.size(); ++e) {
        EXPECT_LE(testing::relative_error(per_g[i][tt].values[e], per_g[0][tt].values[e], mag[e]), 1e-5);
      }
    }
  }
}

TEST(ForwardTest, RowsGatheredEqualIndicesSent) {
  const auto inst = make_instance(6, 4, 3, 90, 4, 11, 8);
  const auto res = embedding_bag_forward(inst.tables, inst.plan, inst.batches);
  std::uint64_t gathered = 0, sent = 0;
  for (const auto& r : res.ranks) gathered += r.rows_touched;
  for (const auto& b : inst.batches) sent += b.total_indices();
  EXPECT_EQ(gathered, sent);
}

TEST(ForwardTest, PhasesAddUpToTheFinalClock) {
  const auto inst = make_instance(7, 4, 2, 300, 32, 40, 12, PoolingMode::Constant);
  for (Backend b : {Backend::CollectiveOptimized, Backend::OneSided}) {
    ForwardOptions opts;
    opts.backend = b;
    const auto res = embedding_bag_forward(inst.tables, inst.plan, inst.batches, opts);
    double last = 0;
    for (const auto& e : res.trace) last = std::max(last, e.start_us + e.duration_us);
    for (const auto& r : res.ranks) {
      EXPECT_EQ(r.times, res.ranks[0].times);
      EXPECT_GE(r.times.permute_us, 0);
      EXPECT_GE(r.times.gather_us, 0);
      EXPECT_GE(r.times.reduce_scatter_us, 0);
      // The final clock includes the one-sided local sum after the last trace event.
      EXPECT_GE(r.times.total_us() * (1 + 1e-12), last);
    }
  }
}

TEST(ForwardTest, CountReplayPricesLikeTheFullPass) {
  for (std::uint32_t g : {1u, 2u, 3u, 8u}) {
    const auto inst = make_instance(40 + g, g, 3, 120, 24, 17, 8, PoolingMode::Constant);
    const auto v = measure_volumes(inst.plan, 24, [&](std::uint32_t r) { return inst.batches[r]; });
    for (Backend b : {Backend::CollectiveOptimized, Backend::OneSided}) {
      ForwardOptions opts;
      opts.backend = b;
      const auto res = embedding_bag_forward(inst.tables, inst.plan, inst.batches, opts);
      const auto want = res.ranks[0].times;
      const auto got = price_volumes(v, b, CostModel::default_model());
      EXPECT_NEAR(got.permute_us, want.permute_us, 1e-9 * want.permute_us);
      EXPECT_NEAR(got.gather_us, want.gather_us, 1e-9 * want.gather_us);
      EXPECT_NEAR(got.reduce_scatter_us, want.reduce_scatter_us, 1e-9 * want.reduce_scatter_us);
      std::uint64_t max_rows = 0;
      for (const auto& r : res.ranks) max_rows = std::max(max_rows, r.rows_touched);
      EXPECT_EQ(v.max_rows_touched, max_rows);
    }
    EXPECT_EQ(v.permute_bytes, 3.0 * 17 * 8 * 20);
    EXPECT_EQ(v.reduce_scatter_bytes, double(g) * 3 * 17 * 24 * 4);
  }
}

TEST(ForwardTest, EmptyBatchGatherCostsOverheadOnly) {
  const auto tables = synth_tables(1, 1, 10, 4);
  const std::vector<std::uint64_t> rows{10};
  JaggedBatch empty;
  empty.tables.push_back({0, {}, {0, 0, 0}});
  const std::vector<JaggedBatch> batches(2, empty);
  const auto res = embedding_bag_forward(tables, ShardingPlan::row_wise(rows, 2), batches);
  EXPECT_EQ(res.ranks[0].times.gather_us, CostModel::default_model().kernel_overhead_us());
  for (float x : res.ranks[1].output[0].values) EXPECT_EQ(x, 0.0f);
}

TEST(ForwardTest, RoutingHookCorruptionIsVisible) {
  const auto inst = make_instance(9, 2, 1, 64, 4, 8, 4, PoolingMode::Constant);
  ForwardOptions opts;
  opts.routing_hook = [](std::uint32_t rank, Buckets& b) {
    if (rank == 0 && !b[0].empty()) b[0][0].local_row = (b[0][0].local_row + 1) % 32;
  };
  const auto res = embedding_bag_forward(inst.tables, inst.plan, inst.batches, opts);
  const auto want = oracle_embedding_bag(inst.tables, inst.batches[0]);
  EXPECT_NE(res.ranks[0].output[0].values, want[0].values);
}

}  // namespace
}  // namespace embsim::embag
