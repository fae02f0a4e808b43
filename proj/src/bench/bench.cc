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

#include "embsim/bench/bench.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "embsim/collectives/collectives.h"
#include "embsim/core/errors.h"
#include "embsim/core/oracle.h"
#include "embsim/core/sharding.h"
#include "embsim/core/synth.h"
#include "embsim/embag/embag.h"

namespace embsim::bench {

using fabric::Backend;
using fabric::CollectiveKind;
using fabric::CostModel;
using fabric::RankContext;
using fabric::Task;

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Collectives: return "collectives";
    case Mode::Embag: return "embag";
    case Mode::Projection: return "projection";
    case Mode::Validate: return "validate";
  }
  return "unknown";
}

Mode parse_mode(std::string_view name) {
  for (Mode m : {Mode::Collectives, Mode::Embag, Mode::Projection, Mode::Validate}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown mode '" + std::string(name) + "'");
}

Format parse_format(std::string_view name) {
  if (name == "csv") return Format::Csv;
  if (name == "json") return Format::Json;
  throw ConfigError("unknown format '" + std::string(name) + "' (expected csv or json)");
}

std::vector<Backend> parse_backends(std::string_view name) {
  if (name == "both") return {Backend::CollectiveOptimized, Backend::OneSided};
  return {fabric::parse_backend(name)};
}

namespace {

template <typename T>
void require_positive(const std::vector<T>& values, std::string_view what) {
  if (values.empty()) throw ConfigError(std::string(what) + " list is empty");
  for (T v : values) {
    if (v == 0) throw ConfigError(std::string(what) + " values must be positive");
  }
}

}  // namespace

void validate_spec(const SweepSpec& s) {
  require_positive(s.ranks, "ranks");
  if (s.backends.empty()) throw ConfigError("backend list is empty");
  switch (s.mode) {
    case Mode::Collectives:
      if (s.collectives.empty()) throw ConfigError("collective list is empty");
      if (s.min_bytes == 0 || s.max_bytes < s.min_bytes) {
        throw ConfigError("message size bounds must satisfy 0 < min <= max");
      }
      break;
    case Mode::Embag: {
      require_positive(s.batch, "batch");
      require_positive(s.tables, "tables");
      require_positive(s.pooling, "pooling");
      require_positive(s.dim, "dim");
      if (s.rows == 0) throw ConfigError("rows must be positive");
      const auto p = *std::max_element(s.pooling.begin(), s.pooling.end());
      if (p > s.rows) {
        throw ConfigError("pooling " + std::to_string(p) + " exceeds rows per table " +
                          std::to_string(s.rows));
      }
      const auto g = *std::max_element(s.ranks.begin(), s.ranks.end());
      if (g > s.rows) {
        throw ConfigError(std::to_string(g) + " ranks cannot split " + std::to_string(s.rows) +
                          " rows");
      }
      if (s.check_batch == 0 || s.check_rows == 0) {
        throw ConfigError("oracle check sizes must be positive");
      }
      break;
    }
    case Mode::Projection:
      require_positive(s.batch, "batch");
      require_positive(s.tables, "tables");
      require_positive(s.pooling, "pooling");
      require_positive(s.dim, "dim");
      require_positive(s.table_bytes, "table size");
      if (s.hbm_bytes == 0) throw ConfigError("device memory must be positive");
      break;
    case Mode::Validate:
      if (s.configs == 0) throw ConfigError("validation needs at least one config");
      break;
  }
}

SweepSpec preset(std::string_view name) {
  SweepSpec s;
  if (name == "fig1") {
    s.mode = Mode::Collectives;
    s.ranks = {8};
  } else if (name == "fig6-8") {
    s.mode = Mode::Embag;
    s.ranks = {8};
    s.tables = {2, 4, 8, 16, 32, 64};
    s.batch = {128, 1024, 4096};
    s.pooling = {4, 8, 16};
    s.dim = {128};
  } else if (name == "sec5-single-table") {
    s.mode = Mode::Embag;
    s.ranks = {1, 2, 4, 8};
    s.tables = {1};
    s.batch = {128, 256, 512, 1024};
    s.pooling = {4, 8, 16};
    s.dim = {32, 64, 128, 256};
  } else if (name == "fig9") {
    s.mode = Mode::Projection;
    s.backends = {Backend::CollectiveOptimized};
    s.batch = {128, 256, 512, 1024, 4096};
    s.tables = {1, 2, 4, 8, 16, 32, 64};
    s.pooling = {4, 8, 16};
    s.dim = {32, 64, 128, 256};
    s.table_bytes.clear();
    for (std::uint64_t b = 160 * projector::kGiB; b <= 10 * projector::kTiB; b *= 2) {
      s.table_bytes.push_back(b);
    }
  } else {
    throw ConfigError("unknown preset '" + std::string(name) +
                      "' (expected fig1, fig6-8, fig9 or sec5-single-table)");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Collective references

namespace {

using Payload = std::vector<std::vector<std::int32_t>>;  // per rank

std::int32_t payload_value(SplitMix64& rng) {
  return static_cast<std::int32_t>(rng.uniform_below(2001)) - 1000;
}

Payload make_payload(std::uint64_t seed, std::uint32_t g, std::size_t n) {
  Payload p(g);
  for (std::uint32_t r = 0; r < g; ++r) {
    SplitMix64 rng = SplitMix64(seed).split(r);
    p[r].resize(n);
    for (auto& v : p[r]) v = payload_value(rng);
  }
  return p;
}

Payload reference(CollectiveKind kind, const Payload& in, std::uint32_t root) {
  const std::size_t g = in.size();
  const std::size_t n = in.front().size();
  Payload out(g);
  switch (kind) {
    case CollectiveKind::AllReduce: {
      std::vector<std::int32_t> sum(n, 0);
      for (const auto& v : in) {
        for (std::size_t i = 0; i < n; ++i) sum[i] += v[i];
      }
      std::fill(out.begin(), out.end(), sum);
      break;
    }
    case CollectiveKind::AllGather: {
      std::vector<std::int32_t> cat;
      for (const auto& v : in) cat.insert(cat.end(), v.begin(), v.end());
      std::fill(out.begin(), out.end(), cat);
      break;
    }
    case CollectiveKind::AllToAll: {
      const std::size_t c = n / g;
      for (std::size_t dst = 0; dst < g; ++dst) {
        for (std::size_t src = 0; src < g; ++src) {
          for (std::size_t i = 0; i < c; ++i) out[dst].push_back(in[src][dst * c + i]);
        }
      }
      break;
    }
    case CollectiveKind::Broadcast:
      std::fill(out.begin(), out.end(), in[root]);
      break;
    case CollectiveKind::ReduceScatter: {
      const std::size_t c = n / g;
      for (std::size_t dst = 0; dst < g; ++dst) {
        out[dst].assign(c, 0);
        for (std::size_t src = 0; src < g; ++src) {
          for (std::size_t i = 0; i < c; ++i) out[dst][i] += in[src][dst * c + i];
        }
      }
      break;
    }
  }
  return out;
}

Payload run_collective(CollectiveKind kind, Backend backend, fabric::Scheduler scheduler,
                       const CostModel& model, const Payload& in, std::uint32_t root) {
  const fabric::GroupConfig config{static_cast<std::uint32_t>(in.size()), backend, &model,
                                   scheduler};
  auto program = [&](RankContext& ctx) -> Task<std::vector<std::int32_t>> {
    std::span<const std::int32_t> mine = in[ctx.rank()];
    switch (kind) {
      case CollectiveKind::AllReduce: co_return co_await coll::all_reduce(ctx, mine);
      case CollectiveKind::AllGather: co_return co_await coll::all_gather(ctx, mine);
      case CollectiveKind::AllToAll: co_return co_await coll::all_to_all(ctx, mine);
      case CollectiveKind::Broadcast: co_return co_await coll::broadcast(ctx, root, mine);
      case CollectiveKind::ReduceScatter: co_return co_await coll::reduce_scatter(ctx, mine);
    }
    co_return std::vector<std::int32_t>{};
  };
  return fabric::spawn_spmd(config, program).values;
}

// Variable-size all-to-all: rank s sends (s + 2d + n) % (n + 3) elements to d.
std::string check_all_to_all_v(Backend backend, fabric::Scheduler scheduler,
                               const CostModel& model, std::uint32_t g, std::size_t n,
                               std::uint64_t seed) {
  std::vector<std::vector<std::vector<std::int32_t>>> send(g);
  for (std::uint32_t s = 0; s < g; ++s) {
    SplitMix64 rng = SplitMix64(seed).split(s);
    send[s].resize(g);
    for (std::uint32_t d = 0; d < g; ++d) {
      send[s][d].resize((s + 2 * d + n) % (n + 3));
      for (auto& v : send[s][d]) v = payload_value(rng);
    }
  }
  const fabric::GroupConfig config{g, backend, &model, scheduler};
  auto program = [&](RankContext& ctx) -> Task<std::vector<std::vector<std::int32_t>>> {
    co_return co_await coll::all_to_all_v(ctx, send[ctx.rank()]);
  };
  const auto got = fabric::spawn_spmd(config, program).values;
  for (std::uint32_t d = 0; d < g; ++d) {
    for (std::uint32_t s = 0; s < g; ++s) {
      if (got[d][s] != send[s][d]) {
        return "all_to_all_v G=" + std::to_string(g) + " n=" + std::to_string(n) + " backend=" +
               std::string(fabric::to_string(backend)) + ": rank " + std::to_string(d) +
               " chunk from rank " + std::to_string(s) + " differs";
      }
    }
  }
  return {};
}

// Returns an empty string on success, otherwise a located description.
std::string check_collective(CollectiveKind kind, Backend backend, fabric::Scheduler scheduler,
                             const CostModel& model, std::uint32_t g, std::size_t n,
                             std::uint64_t seed) {
  const bool chunked = kind == CollectiveKind::AllToAll || kind == CollectiveKind::ReduceScatter;
  const Payload in = make_payload(seed, g, chunked ? n * g : n);
  const std::uint32_t root = static_cast<std::uint32_t>(seed % g);
  const Payload want = reference(kind, in, root);
  const Payload got = run_collective(kind, backend, scheduler, model, in, root);
  for (std::uint32_t r = 0; r < g; ++r) {
    if (got[r].size() != want[r].size()) {
      return std::string(fabric::to_string(kind)) + " G=" + std::to_string(g) + " n=" +
             std::to_string(n) + " backend=" + std::string(fabric::to_string(backend)) +
             ": rank " + std::to_string(r) + " got " + std::to_string(got[r].size()) +
             " elements, want " + std::to_string(want[r].size());
    }
    for (std::size_t i = 0; i < got[r].size(); ++i) {
      if (got[r][i] != want[r][i]) {
        return std::string(fabric::to_string(kind)) + " G=" + std::to_string(g) + " n=" +
               std::to_string(n) + " backend=" + std::string(fabric::to_string(backend)) +
               ": rank " + std::to_string(r) + " element " + std::to_string(i) + " got " +
               std::to_string(got[r][i]) + ", want " + std::to_string(want[r][i]);
      }
    }
  }
  return {};
}

}  // namespace

std::vector<BenchRow> run_collective_sweep(const SweepSpec& spec, const CostModel& model) {
  validate_spec(spec);
  std::vector<BenchRow> rows;
  for (std::uint32_t g : spec.ranks) {
    for (Backend backend : spec.backends) {
      for (CollectiveKind kind : spec.collectives) {
        for (std::uint64_t m = spec.min_bytes; m <= spec.max_bytes; m *= 2) {
          if (m <= spec.check_bytes) {
            const bool chunked =
                kind == CollectiveKind::AllToAll || kind == CollectiveKind::ReduceScatter;
            const std::size_t elems = m / sizeof(std::int32_t);
            const std::size_t n = chunked ? std::max<std::size_t>(1, elems / g) : elems;
            const std::string err =
                check_collective(kind, backend, spec.scheduler, model, g, n, spec.seed + m);
            if (!err.empty()) throw ValidationError("collective check failed: " + err);
          }
          BenchRow row;
          row.mode = "collectives";
          row.backend = std::string(fabric::to_string(backend));
          row.ranks = g;
          row.phase = std::string(fabric::to_string(kind));
          row.msg_bytes = static_cast<double>(m);
          row.sim_time_us = model.eval_cost(backend, kind, row.msg_bytes, g);
          rows.push_back(std::move(row));
          if (m > std::numeric_limits<std::uint64_t>::max() / 2) break;
        }
      }
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Embedding bag

namespace {

struct Seeds {
  std::uint64_t tables;
  std::uint64_t batches;
};

Seeds derive_seeds(std::uint64_t seed) {
  const SplitMix64 root(seed);
  return {root.split(0).next(), root.split(1).next()};
}

// Element-wise sum of |row| over each bag: the scale against which fp32
// reassociation error is measured.
PooledOutput magnitude_reference(std::span<const EmbeddingTable> tables,
                                 const JaggedBatch& batch) {
  PooledOutput out;
  for (std::size_t t = 0; t < tables.size(); ++t) {
    const TableBatch& tb = batch.tables[t];
    PooledMatrix m(tables[t].table_id(), tb.batch_size(), tables[t].dim());
    std::size_t pos = 0;
    for (std::size_t b = 0; b < tb.batch_size(); ++b) {
      auto dst = m.row(b);
      for (BagLength k = 0; k < tb.lengths[b]; ++k, ++pos) {
        const auto src = tables[t].row(tb.indices[pos]);
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += std::fabs(src[j]);
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

struct Comparison {
  double max_rel_error = 0.0;
  bool bit_exact = true;
  std::string first_failure;
};

Comparison compare_outputs(const PooledOutput& got, const PooledOutput& want,
                           const PooledOutput& magnitude, double tolerance) {
  Comparison c;
  if (got.size() != want.size()) {
    c.bit_exact = false;
    c.max_rel_error = std::numeric_limits<double>::infinity();
    c.first_failure = "table count " + std::to_string(got.size()) + " vs " +
                      std::to_string(want.size());
    return c;
  }
  for (std::size_t t = 0; t < want.size(); ++t) {
    if (got[t].values.size() != want[t].values.size()) {
      c.bit_exact = false;
      c.max_rel_error = std::numeric_limits<double>::infinity();
      if (c.first_failure.empty()) c.first_failure = "table " + std::to_string(t) + " shape";
      continue;
    }
    if (std::memcmp(got[t].values.data(), want[t].values.data(),
                    want[t].values.size() * sizeof(float)) != 0) {
      c.bit_exact = false;
    }
    const std::uint32_t d = want[t].dim;
    for (std::size_t i = 0; i < want[t].values.size(); ++i) {
      const double a = got[t].values[i];
      const double b = want[t].values[i];
      const double scale = std::max({std::fabs(b), static_cast<double>(magnitude[t].values[i]),
                                     static_cast<double>(std::numeric_limits<float>::min())});
      const double rel = std::fabs(a - b) / scale;
      if (!(rel <= c.max_rel_error)) c.max_rel_error = rel;
      if (!(rel <= tolerance) && c.first_failure.empty()) {
        c.first_failure = "table " + std::to_string(t) + " sample " + std::to_string(i / d) +
                          " element " + std::to_string(i % d) + ": got " + format_number(a) +
                          ", want " + format_number(b) + " (relative error " +
                          format_number(rel) + ")";
      }
    }
  }
  return c;
}

constexpr double kTolerance = 1e-5;

// Corrupts one routed row so the result is wrong but still in range.
void corrupt_routing(std::uint32_t rank, embag::Buckets& buckets,
                     const ShardingPlan& plan) {
  if (rank != 0) return;
  for (std::uint32_t dst = 0; dst < buckets.size(); ++dst) {
    if (buckets[dst].empty()) continue;
    auto& rec = buckets[dst].front();
    const std::uint64_t n = plan.range(rec.table_id, dst).size();
    rec.local_row = (rec.local_row + 1) % n;
    return;
  }
}

std::string describe_point(std::uint32_t g, std::uint32_t t, std::uint64_t r, std::uint32_t d,
                           std::uint32_t b, Backend backend) {
  return "G=" + std::to_string(g) + " T=" + std::to_string(t) + " R=" + std::to_string(r) +
         " D=" + std::to_string(d) + " B=" + std::to_string(b) +
         " backend=" + std::string(fabric::to_string(backend));
}

std::vector<std::uint64_t> uniform_rows(std::uint32_t tables, std::uint64_t rows) {
  return std::vector<std::uint64_t>(tables, rows);
}

}  // namespace

std::vector<BenchRow> run_embag_sweep(const SweepSpec& spec, const CostModel& model) {
  validate_spec(spec);
  const Seeds seeds = derive_seeds(spec.seed);
  std::vector<BenchRow> out;

  for (std::uint32_t g : spec.ranks) {
    for (std::uint32_t t : spec.tables) {
      for (std::uint32_t b : spec.batch) {
        for (std::uint32_t p : spec.pooling) {
          for (std::uint32_t d : spec.dim) {
            // Oracle check of the full pass at reduced size.
            const std::uint64_t check_r =
                std::max<std::uint64_t>({std::min(spec.rows, spec.check_rows), g, p});
            const std::uint32_t check_b = std::min(b, spec.check_batch);
            const auto tables = synth_tables(seeds.tables, t, check_r, d);
            const auto check_rows = uniform_rows(t, check_r);
            const ShardingPlan check_plan = ShardingPlan::row_wise(check_rows, g);
            std::vector<JaggedBatch> batches;
            for (std::uint32_t r = 0; r < g; ++r) {
              batches.push_back(synth_batch(seeds.batches, r, check_b, check_rows, p));
            }
            for (Backend backend : spec.backends) {
              embag::ForwardOptions opts;
              opts.backend = backend;
              opts.scheduler = spec.scheduler;
              opts.cost_model = &model;
              const auto result = embag::embedding_bag_forward(tables, check_plan, batches, opts);
              for (std::uint32_t r = 0; r < g; ++r) {
                const auto want = oracle_embedding_bag(tables, batches[r]);
                const auto c = compare_outputs(result.ranks[r].output, want,
                                               magnitude_reference(tables, batches[r]),
                                               kTolerance);
                if (!c.first_failure.empty()) {
                  throw ValidationError("embedding bag check failed at " +
                                        describe_point(g, t, check_r, d, check_b, backend) +
                                        " rank " + std::to_string(r) + ": " + c.first_failure);
                }
              }
            }

            // Full-size timing from routed counts.
            const auto rows = uniform_rows(t, spec.rows);
            const ShardingPlan plan = ShardingPlan::row_wise(rows, g);
            const embag::PhaseVolumes v = embag::measure_volumes(
                plan, d, [&](std::uint32_t r) { return synth_batch(seeds.batches, r, b, rows, p); });

            for (Backend backend : spec.backends) {
              const embag::PhaseTimes times = embag::price_volumes(v, backend, model);
              auto row = [&](std::string_view phase, double bytes, double us) {
                BenchRow r;
                r.mode = "embag";
                r.backend = std::string(fabric::to_string(backend));
                r.ranks = g;
                r.tables = t;
                r.rows = spec.rows;
                r.dim = d;
                r.batch = b;
                r.pooling = p;
                r.phase = std::string(phase);
                r.msg_bytes = bytes;
                r.sim_time_us = us;
                out.push_back(std::move(r));
              };
              row("permute", v.permute_bytes, times.permute_us);
              row("gather",
                  static_cast<double>(v.max_rows_touched) * d * kElementBytes, times.gather_us);
              row("reduce_scatter", v.reduce_scatter_bytes, times.reduce_scatter_us);
              row("total", v.permute_count_bytes + v.permute_bytes + v.reduce_scatter_bytes,
                  times.total_us());
            }
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Projection

std::vector<BenchRow> run_projection(const SweepSpec& spec, const CostModel& model) {
  validate_spec(spec);
  std::vector<projector::Workload> workloads;
  for (std::uint32_t b : spec.batch) {
    for (std::uint32_t t : spec.tables) {
      for (std::uint32_t p : spec.pooling) {
        for (std::uint32_t d : spec.dim) workloads.push_back({b, t, p, d});
      }
    }
  }
  std::vector<BenchRow> out;
  for (Backend backend : spec.backends) {
    for (std::uint64_t size : spec.table_bytes) {
      for (const auto& w : workloads) {
        projector::ProjectionConfig c;
        c.table_bytes = size;
        c.hbm_bytes_per_gpu = spec.hbm_bytes;
        c.workload = w;
        c.backend = backend;
        const auto r = projector::project(c, model);
        BenchRow row;
        row.mode = "projection";
        row.backend = std::string(fabric::to_string(backend));
        row.ranks = r.gpus_required;
        row.tables = w.tables;
        row.rows = size / (std::uint64_t{w.dim} * c.element_bytes);
        row.dim = w.dim;
        row.batch = w.batch;
        row.pooling = w.pooling;
        row.phase = "total";
        row.msg_bytes = static_cast<double>(r.messages.index_bytes + r.messages.output_bytes);
        row.sim_time_us = r.distributed_us;
        row.speedup = r.speedup;
        out.push_back(std::move(row));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

ValidationReport run_validate(const SweepSpec& spec, const CostModel& model) {
  validate_spec(spec);
  ValidationReport report;
  auto fail = [&](std::string msg) {
    report.passed = false;
    if (report.failures.size() < 20) report.failures.push_back(std::move(msg));
  };

  constexpr std::array<std::uint32_t, 4> kTableCounts = {1, 2, 4, 8};
  SplitMix64 rng = SplitMix64(spec.seed).split(2);
  for (std::uint32_t c = 0; c < spec.configs; ++c) {
    const std::uint32_t g = spec.ranks[rng.uniform_below(spec.ranks.size())];
    const std::uint32_t t = kTableCounts[rng.uniform_below(kTableCounts.size())];
    const std::uint64_t r = std::max<std::uint64_t>(8 + rng.uniform_below(4089), g);
    const auto d = static_cast<std::uint32_t>(4 + rng.uniform_below(253));
    const auto b = static_cast<std::uint32_t>(1 + rng.uniform_below(128));
    const auto p = static_cast<std::uint32_t>(std::min<std::uint64_t>(16, r));
    const std::uint64_t cseed = rng.next();

    const Seeds seeds = derive_seeds(cseed);
    const auto tables = synth_tables(seeds.tables, t, r, d);
    const auto rows = uniform_rows(t, r);
    const ShardingPlan plan = ShardingPlan::row_wise(rows, g);
    std::vector<JaggedBatch> batches;
    for (std::uint32_t k = 0; k < g; ++k) {
      batches.push_back(synth_batch(seeds.batches, k, b, rows, p, PoolingMode::Variable));
    }
    std::vector<PooledOutput> want, magnitude;
    for (const auto& batch : batches) {
      want.push_back(oracle_embedding_bag(tables, batch));
      magnitude.push_back(magnitude_reference(tables, batch));
    }

    std::vector<PooledOutput> first_backend;
    for (Backend backend : spec.backends) {
      const std::string where =
          "config #" + std::to_string(c) + " (" + describe_point(g, t, r, d, b, backend) + ")";
      embag::ForwardOptions opts;
      opts.backend = backend;
      opts.scheduler = spec.scheduler;
      opts.cost_model = &model;
      if (spec.inject_routing_fault) {
        opts.routing_hook = [&plan](std::uint32_t rank, embag::Buckets& bk) {
          corrupt_routing(rank, bk, plan);
        };
      }
      embag::ForwardResult result;
      try {
        result = embag::embedding_bag_forward(tables, plan, batches, opts);
      } catch (const Error& e) {
        fail(where + ": " + e.what());
        continue;
      }
      for (std::uint32_t k = 0; k < g; ++k) {
        const auto cmp = compare_outputs(result.ranks[k].output, want[k], magnitude[k], kTolerance);
        report.max_rel_error = std::max(report.max_rel_error, cmp.max_rel_error);
        if (g == 1) {
          report.max_rel_error_single_rank =
              std::max(report.max_rel_error_single_rank, cmp.max_rel_error);
          if (!cmp.bit_exact) fail(where + " rank 0: single-rank output is not bit-identical");
        }
        if (!cmp.first_failure.empty()) {
          fail(where + " rank " + std::to_string(k) + ": " + cmp.first_failure);
        }
      }
      std::vector<PooledOutput> outputs;
      for (auto& rr : result.ranks) outputs.push_back(std::move(rr.output));
      if (first_backend.empty()) {
        first_backend = std::move(outputs);
      } else {
        for (std::uint32_t k = 0; k < g; ++k) {
          for (std::size_t i = 0; i < t; ++i) {
            if (outputs[k][i].values != first_backend[k][i].values) {
              fail(where + " rank " + std::to_string(k) + " table " + std::to_string(i) +
                   ": output differs from the other backend");
            }
          }
        }
      }
    }
    ++report.oracle_configs;
  }

  constexpr std::array<std::uint32_t, 5> kGroups = {1, 2, 3, 4, 8};
  for (std::uint32_t g : kGroups) {
    for (std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t{g}, std::size_t{17} * g}) {
      for (Backend backend : spec.backends) {
        for (CollectiveKind kind : fabric::kCollectiveKinds) {
          const std::string err = check_collective(kind, backend, spec.scheduler, model, g, n,
                                                   spec.seed + 1000 * g + n);
          if (!err.empty()) fail(err);
          ++report.collective_cases;
        }
        const std::string err =
            check_all_to_all_v(backend, spec.scheduler, model, g, n, spec.seed + 7 * g + n);
        if (!err.empty()) fail(err);
        ++report.collective_cases;
      }
    }
  }
  return report;
}

std::string ValidationReport::to_text() const {
  std::ostringstream os;
  os << "oracle configs: " << oracle_configs << "\n"
     << "collective cases: " << collective_cases << "\n"
     << "max relative error: " << format_number(max_rel_error) << "\n"
     << "max relative error (single rank): " << format_number(max_rel_error_single_rank) << "\n";
  for (const auto& f : failures) os << "FAIL " << f << "\n";
  os << "result: " << (passed ? "PASS" : "FAIL") << "\n";
  return os.str();
}

std::string ValidationReport::to_json() const {
  nlohmann::ordered_json j;
  j["passed"] = passed;
  j["oracle_configs"] = oracle_configs;
  j["collective_cases"] = collective_cases;
  j["max_rel_error"] = max_rel_error;
  j["max_rel_error_single_rank"] = max_rel_error_single_rank;
  j["failures"] = failures;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Output

std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string format_rows(std::span<const BenchRow> rows, Format format) {
  if (format == Format::Json) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      nlohmann::ordered_json o;
      auto opt = [](const auto& v) {
        return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
      };
      o["mode"] = r.mode;
      o["backend"] = r.backend;
      o["ranks"] = r.ranks;
      o["tables"] = opt(r.tables);
      o["rows"] = opt(r.rows);
      o["dim"] = opt(r.dim);
      o["batch"] = opt(r.batch);
      o["pooling"] = opt(r.pooling);
      o["phase"] = r.phase;
      o["msg_bytes"] = r.msg_bytes;
      o["sim_time_us"] = r.sim_time_us;
      o["speedup"] = opt(r.speedup);
      arr.push_back(std::move(o));
    }
    return arr.dump(2) + "\n";
  }

  std::string s(kCsvHeader);
  s += '\n';
  auto cell = [&](const auto& v) {
    if (v) s += std::to_string(*v);
    s += ',';
  };
  for (const auto& r : rows) {
    s += r.mode + ',' + r.backend + ',' + std::to_string(r.ranks) + ',';
    cell(r.tables);
    cell(r.rows);
    cell(r.dim);
    cell(r.batch);
    cell(r.pooling);
    s += r.phase + ',' + format_number(r.msg_bytes) + ',' + format_number(r.sim_time_us) + ',';
    if (r.speedup) s += format_number(*r.speedup);
    s += '\n';
  }
  return s;
}

void write_file_atomic(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write " + tmp.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw ConfigError("cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw ConfigError("cannot move output into place at " + path + ": " + ec.message());
  }
}

}  // namespace embsim::bench
