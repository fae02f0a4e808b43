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

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "embsim/collectives/collectives.h"
#include "embsim/core/errors.h"
#include "embsim/fabric/cost_model.h"
#include "embsim/fabric/rank_group.h"
#include "support/reference.h"

namespace embsim::fabric {
namespace {

using coll::all_gather;
using coll::all_reduce;

constexpr Backend kCO = Backend::CollectiveOptimized;
constexpr Backend kOS = Backend::OneSided;

class SchedulerTest : public ::testing::TestWithParam<Scheduler> {
 protected:
  GroupConfig config(std::uint32_t g, Backend b = kCO) const { return {g, b, nullptr, GetParam()}; }
};

TEST_P(SchedulerTest, ReturnsRankIds) {
  for (std::uint32_t g : {1u, 4u}) {
    auto res = spawn_spmd(config(g), [](RankContext& ctx) -> Task<std::uint32_t> {
      co_return ctx.rank();
    });
    std::vector<std::uint32_t> want(g);
    for (std::uint32_t r = 0; r < g; ++r) want[r] = r;
    EXPECT_EQ(res.values, want);
  }
}

// Uneven local work followed by collectives: clocks depend on the max rule.
Task<double> staggered(RankContext& ctx) {
  ctx.advance_local(1.5 * ctx.rank());
  const std::vector<int> v(ctx.rank() + 1 > 0 ? 4 : 0, static_cast<int>(ctx.rank()));
  auto sum = co_await all_reduce<int>(ctx, v);
  ctx.advance_local(0.25 * sum[0]);
  auto cat = co_await all_gather<int>(ctx, v);
  co_return ctx.clock() + cat.size();
}

TEST_P(SchedulerTest, RepeatRunsAreIdentical) {
  auto a = spawn_spmd(config(5), staggered);
  auto b = spawn_spmd(config(5), staggered);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.clocks, b.clocks);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].start_us, b.trace[i].start_us);
    EXPECT_EQ(a.trace[i].duration_us, b.trace[i].duration_us);
  }
}

TEST(SchedulerTest, BothSchedulersAgree) {
  auto rr = spawn_spmd(GroupConfig{6, kOS, nullptr, Scheduler::RoundRobin}, staggered);
  auto cc = spawn_spmd(GroupConfig{6, kOS, nullptr, Scheduler::Concurrent}, staggered);
  EXPECT_EQ(rr.values, cc.values);
  EXPECT_EQ(rr.clocks, cc.clocks);
}

TEST_P(SchedulerTest, CollectiveStartsAtSlowestRankAndSyncsClocks) {
  const auto& model = CostModel::default_model();
  auto res = spawn_spmd(config(3), [](RankContext& ctx) -> Task<int> {
    ctx.advance_local(ctx.rank() == 1 ? 9.0 : 5.0);
    co_await coll::barrier(ctx);
    const std::vector<int> v{1};
    co_await all_reduce<int>(ctx, v);
    co_return 0;
  });
  const double want = 9.0 + model.eval_cost(kCO, CollectiveKind::AllReduce, 4, 3);
  for (double c : res.clocks) EXPECT_DOUBLE_EQ(c, want);
  ASSERT_EQ(res.trace.size(), 2u);
  EXPECT_EQ(res.trace[0].name, "barrier");
  EXPECT_EQ(res.trace[0].duration_us, 0.0);
  EXPECT_EQ(res.trace[1].start_us, 9.0);
}

TEST_P(SchedulerTest, MismatchedPayloadIsProtocolErrorAtCallSite) {
  auto bad = [](RankContext& ctx) -> Task<int> {
    const std::vector<int> v(ctx.rank() == 2 ? 3 : 2, 1);
    co_await all_reduce<int>(ctx, v);
    co_return 0;
  };
  try {
    spawn_spmd(config(4), bad);
    FAIL() << "expected ProtocolError";
  } catch (const ProtocolError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("all_reduce"), std::string::npos) << msg;
    EXPECT_NE(msg.find("fabric_test.cc"), std::string::npos) << msg;
    EXPECT_NE(msg.find("rank 2"), std::string::npos) << msg;
  }
}

TEST_P(SchedulerTest, DifferentCollectivesIsProtocolError) {
  auto bad = [](RankContext& ctx) -> Task<int> {
    const std::vector<int> v(2, 1);
    if (ctx.rank() == 0) {
      co_await all_reduce<int>(ctx, v);
    } else {
      co_await all_gather<int>(ctx, v);
    }
    co_return 0;
  };
  EXPECT_THROW(spawn_spmd(config(2), bad), ProtocolError);
}

TEST_P(SchedulerTest, RankSkippingACollectiveIsProtocolError) {
  auto bad = [](RankContext& ctx) -> Task<int> {
    if (ctx.rank() != 1) co_await coll::barrier(ctx);
    co_return 0;
  };
  EXPECT_THROW(spawn_spmd(config(3), bad), ProtocolError);
}

TEST_P(SchedulerTest, LowestFailingRankIsReported) {
  auto bad = [](RankContext& ctx) -> Task<int> {
    if (ctx.rank() >= 1) throw ShapeError("rank " + std::to_string(ctx.rank()) + " broke");
    co_await coll::barrier(ctx);
    co_return 0;
  };
  try {
    spawn_spmd(config(4), bad);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_STREQ(e.what(), "rank 1 broke");
  }
}

INSTANTIATE_TEST_SUITE_P(Schedulers, SchedulerTest,
                         ::testing::Values(Scheduler::RoundRobin, Scheduler::Concurrent),
                         [](const auto& info) {
                           return info.param == Scheduler::RoundRobin ? "RoundRobin"
                                                                      : "Concurrent";
                         });

TEST(SimClockTest, CollectiveTakesMaxPlusDuration) {
  SimClock c(2);
  c.advance_local(0, 5);
  c.advance_local(1, 9);
  const std::vector<std::uint32_t> all{0, 1};
  c.advance_collective(all, 3);
  EXPECT_EQ(c.now(0), 12);
  EXPECT_EQ(c.now(1), 12);
}

TEST(SimClockTest, ZeroDurationSynchronizes) {
  SimClock c(3);
  c.advance_local(2, 4);
  const std::vector<std::uint32_t> all{0, 1, 2};
  c.advance_collective(all, 0);
  for (std::uint32_t r = 0; r < 3; ++r) EXPECT_EQ(c.now(r), 4);
}

TEST(SimClockTest, ChainedCollectivesAccumulate) {
  SimClock c(2);
  const std::vector<std::uint32_t> all{0, 1};
  c.advance_collective(all, 3);
  c.advance_collective(all, 4);
  EXPECT_EQ(c.now(0), 7);
  EXPECT_EQ(c.now(1), 7);
}

TEST(SimClockTest, NeverMovesBackwards) {
  SimClock c(1);
  EXPECT_THROW(c.advance_local(0, -1), ConfigError);
  const std::vector<std::uint32_t> all{0};
  EXPECT_THROW(c.advance_collective(all, -0.5), ConfigError);
  EXPECT_EQ(c.now(0), 0);
}

TEST(CostModelTest, DefaultMatchesHandFormula) {
  const auto kv = testing::read_calibration(std::string(CostModel::default_text()));
  const auto& m = CostModel::default_model();
  for (Backend b : kBackends) {
    for (CollectiveKind k : kCollectiveKinds) {
      for (std::uint32_t g : {1u, 2u, 3u, 8u, 128u}) {
        for (double bytes = 0; bytes <= double(1 << 28); bytes = bytes ? bytes * 4 : 1) {
          const double want = testing::ref_cost(kv, std::string(to_string(b)),
                                                std::string(to_string(k)), bytes, g);
          EXPECT_NEAR(m.eval_cost(b, k, bytes, g), want, 1e-9 * want);
        }
      }
    }
  }
}

TEST(CostModelTest, ZeroBytesCostsAlpha) {
  const auto& m = CostModel::default_model();
  for (CollectiveKind k : {CollectiveKind::AllReduce, CollectiveKind::AllGather,
                           CollectiveKind::AllToAll, CollectiveKind::Broadcast,
                           CollectiveKind::ReduceScatter}) {
    EXPECT_EQ(m.eval_cost(kCO, k, 0, 8), m.link(kCO, k).alpha_us);
  }
  EXPECT_EQ(m.eval_cost(kOS, CollectiveKind::ReduceScatter, 0, 8),
            m.link(kOS, CollectiveKind::AllToAll).alpha_us);
}

TEST(CostModelTest, MonotoneInMessageSize) {
  const auto& m = CostModel::default_model();
  for (Backend b : kBackends) {
    for (CollectiveKind k : kCollectiveKinds) {
      double prev = -1;
      for (double bytes = 0; bytes < 3e8; bytes += 1 + bytes / 3) {
        const double t = m.eval_cost(b, k, bytes, 8);
        EXPECT_GE(t, prev);
        prev = t;
      }
    }
  }
}

TEST(CostModelTest, PaperRatioSpotChecks) {
  const auto& m = CostModel::default_model();
  auto os = [&](CollectiveKind k, double b) { return m.eval_cost(kOS, k, b, 8); };
  auto co = [&](CollectiveKind k, double b) { return m.eval_cost(kCO, k, b, 8); };
  EXPECT_LE(os(CollectiveKind::AllReduce, 1024), co(CollectiveKind::AllReduce, 1024) / 8);
  EXPECT_LE(os(CollectiveKind::AllGather, 4096), co(CollectiveKind::AllGather, 4096) / 15);
  EXPECT_LT(os(CollectiveKind::AllToAll, 64 << 10), co(CollectiveKind::AllToAll, 64 << 10));
  EXPECT_GT(os(CollectiveKind::AllToAll, 1 << 20), co(CollectiveKind::AllToAll, 1 << 20));
}

TEST(CostModelTest, RankFactors) {
  EXPECT_DOUBLE_EQ(rank_factor(kCO, CollectiveKind::AllReduce, 8), 2.0 * 7 / 8);
  EXPECT_DOUBLE_EQ(rank_factor(kOS, CollectiveKind::AllReduce, 8), 7.0);
  EXPECT_DOUBLE_EQ(rank_factor(kOS, CollectiveKind::AllToAll, 4), 0.75);
  EXPECT_DOUBLE_EQ(rank_factor(kCO, CollectiveKind::Broadcast, 4), 1.0);
  EXPECT_DOUBLE_EQ(rank_factor(kCO, CollectiveKind::AllGather, 1), 0.0);
}

TEST(CostModelTest, GatherComputeCost) {
  CostModel m = CostModel::default_model();
  m.set_compute(2e6, 5);
  EXPECT_EQ(m.gather_compute_cost(0, 128, 4), 5.0);
  EXPECT_NEAR(m.gather_compute_cost(1024, 128, 4), 5.262144, 1e-12);
  const double one = m.gather_compute_cost(1000, 64, 4) - 5;
  const double two = m.gather_compute_cost(2000, 64, 4) - 5;
  EXPECT_DOUBLE_EQ(two, 2 * one);
}

std::string replace_line(std::string text, const std::string& key, const std::string& line) {
  const auto pos = text.find(key + " =");
  const auto end = text.find('\n', pos);
  return text.replace(pos, end - pos, line);
}

TEST(CostModelTest, RoundTripsThroughText) {
  const auto& m = CostModel::default_model();
  EXPECT_EQ(CostModel::parse(m.to_text(), "roundtrip"), m);
}

TEST(CostModelTest, ParseErrors) {
  const std::string base(CostModel::default_text());
  auto expect_error = [&](const std::string& text, const std::string& needle) {
    try {
      CostModel::parse(text, "test.cal");
      ADD_FAILURE() << "expected ConfigError mentioning " << needle;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_error(base + "one-sided.all_reduce.gamma = 1\n", "one-sided.all_reduce.gamma");
  expect_error(base + "collective-optimized.broadcast.alpha_us = 1\n", "duplicate");
  expect_error(replace_line(base, "compute.kernel_overhead_us", ""), "compute.kernel_overhead_us");
  expect_error(replace_line(base, "one-sided.broadcast.beta_us_per_byte", ""),
               "one-sided.broadcast.beta_us_per_byte");
  expect_error(replace_line(base, "collective-optimized.all_gather.alpha_us",
                            "collective-optimized.all_gather.alpha_us = fast"),
               "collective-optimized.all_gather.alpha_us");
  expect_error(replace_line(base, "collective-optimized.all_gather.alpha_us",
                            "collective-optimized.all_gather.alpha_us = -1"),
               "collective-optimized.all_gather.alpha_us");
  expect_error(replace_line(base, "collective-optimized.all_gather.beta_us_per_byte",
                            "collective-optimized.all_gather.beta_us_per_byte = 0"),
               "collective-optimized.all_gather.beta_us_per_byte");
  expect_error(replace_line(base, "one-sided.all_reduce.tail_beta_us_per_byte", ""),
               "one-sided.all_reduce");
  expect_error(base + "one-sided.reduce_scatter.alpha_us = 1\n", "one-sided.reduce_scatter");
  expect_error(base + "no equals sign here\n", "test.cal");
}

TEST(CostModelTest, LoadNamesMissingFile) {
  try {
    CostModel::load("/nonexistent/dir/missing.cal");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("missing.cal"), std::string::npos);
  }
}

TEST(CostModelTest, LoadsShippedFiles) {
  const std::filesystem::path dir = EMBSIM_SOURCE_DIR "/calibration";
  EXPECT_EQ(CostModel::load(dir / "nvlink_h100.cal"), CostModel::default_model());
  // The PCIe slot documents its schema but ships without values.
  EXPECT_THROW(CostModel::load(dir / "pcie_h100.cal"), ConfigError);
}

TEST(CostModelTest, CustomModelDrivesClocks) {
  CostModel m = CostModel::default_model();
  m.set_link(kCO, CollectiveKind::AllReduce, {7.0, 0.5, std::nullopt, 0.0});
  auto res = spawn_spmd(GroupConfig{2, kCO, &m}, [](RankContext& ctx) -> Task<int> {
    const std::vector<int> v(4, 1);  // 16 bytes
    co_await all_reduce<int>(ctx, v);
    co_return 0;
  });
  EXPECT_DOUBLE_EQ(res.clocks[0], 7.0 + 2.0 * 1 / 2 * 16 * 0.5);
}

TEST(ParseTest, NamesRoundTrip) {
  for (Backend b : kBackends) EXPECT_EQ(parse_backend(to_string(b)), b);
  for (CollectiveKind k : kCollectiveKinds) EXPECT_EQ(parse_collective_kind(to_string(k)), k);
  EXPECT_EQ(parse_scheduler("concurrent"), Scheduler::Concurrent);
  EXPECT_THROW(parse_backend("nccl"), ConfigError);
  EXPECT_THROW(parse_collective_kind("scan"), ConfigError);
  EXPECT_THROW(parse_scheduler("random"), ConfigError);
}

}  // namespace
}  // namespace embsim::fabric
