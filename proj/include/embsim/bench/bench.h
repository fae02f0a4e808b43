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

// Sweep drivers behind the `bench` command line: collective cost curves,
// embedding-bag phase timings, projection tables and the validation suite.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "embsim/fabric/cost_model.h"
#include "embsim/fabric/rank_group.h"
#include "embsim/projector/projector.h"

namespace embsim::bench {

enum class Mode { Collectives, Embag, Projection, Validate };
enum class Format { Csv, Json };

std::string_view to_string(Mode m);
Mode parse_mode(std::string_view name);
Format parse_format(std::string_view name);
/// "collective-optimized", "one-sided" or "both".
std::vector<fabric::Backend> parse_backends(std::string_view name);

struct SweepSpec {
  Mode mode = Mode::Embag;
  std::vector<std::uint32_t> ranks{8};
  std::vector<std::uint32_t> batch{128};
  std::vector<std::uint32_t> tables{2};
  std::uint64_t rows = std::uint64_t{1} << 20;
  std::vector<std::uint32_t> pooling{4};
  std::vector<std::uint32_t> dim{128};
  std::vector<fabric::Backend> backends{fabric::Backend::CollectiveOptimized,
                                        fabric::Backend::OneSided};
  std::uint64_t seed = 0;
  std::string out;  // empty: stdout
  Format format = Format::Csv;
  fabric::Scheduler scheduler = fabric::Scheduler::RoundRobin;

  // collectives
  std::vector<fabric::CollectiveKind> collectives{
      fabric::CollectiveKind::AllReduce, fabric::CollectiveKind::AllGather,
      fabric::CollectiveKind::AllToAll, fabric::CollectiveKind::Broadcast};
  std::uint64_t min_bytes = 4;
  std::uint64_t max_bytes = std::uint64_t{256} << 20;
  /// Collectives up to this payload also run on real data and are checked.
  std::uint64_t check_bytes = std::uint64_t{64} << 10;

  // embag: the inline oracle check runs at min(batch, check_batch) samples
  // and min(rows, check_rows) rows per table.
  std::uint32_t check_batch = 8;
  std::uint64_t check_rows = 1024;

  // projection
  std::vector<std::uint64_t> table_bytes{10 * projector::kTiB};
  std::uint64_t hbm_bytes = projector::kDefaultHbmBytes;

  // validate
  std::uint32_t configs = 200;
  bool inject_routing_fault = false;
};

/// Throws ConfigError for empty lists, zero values or pooling > rows.
void validate_spec(const SweepSpec& spec);

/// fig1 | fig6-8 | fig9 | sec5-single-table. Throws ConfigError otherwise.
SweepSpec preset(std::string_view name);

/// One output line. Columns that do not apply to a mode are empty.
struct BenchRow {
  std::string mode;
  std::string backend;
  std::uint32_t ranks = 0;
  std::optional<std::uint32_t> tables;
  std::optional<std::uint64_t> rows;
  std::optional<std::uint32_t> dim;
  std::optional<std::uint32_t> batch;
  std::optional<std::uint32_t> pooling;
  std::string phase;
  double msg_bytes = 0.0;
  double sim_time_us = 0.0;
  std::optional<double> speedup;
};

inline constexpr std::string_view kCsvHeader =
    "mode,backend,ranks,tables,rows,dim,batch,pooling,phase,msg_bytes,sim_time_us,speedup";

/// Every (backend, collective, power-of-two size, ranks) cost. Payloads up
/// to spec.check_bytes are also executed and compared with a reference;
/// a mismatch throws ValidationError.
std::vector<BenchRow> run_collective_sweep(const SweepSpec& spec, const fabric::CostModel& model);

/// Phase rows (permute, gather, reduce_scatter, total) for every grid point
/// and backend. Timings come from the count-only replay at full size; each
/// point first passes an oracle check of the full forward at reduced size.
std::vector<BenchRow> run_embag_sweep(const SweepSpec& spec, const fabric::CostModel& model);

/// Projection rows over spec.table_bytes x (batch, tables, pooling, dim).
/// `rows` holds table_bytes / (dim * 4) and `ranks` the device count.
std::vector<BenchRow> run_projection(const SweepSpec& spec, const fabric::CostModel& model);

struct ValidationReport {
  bool passed = true;
  std::size_t oracle_configs = 0;
  std::size_t collective_cases = 0;
  /// |got - want| / max(|want|, sum of |terms|), over every element.
  double max_rel_error = 0.0;
  /// Same, restricted to single-rank runs (expected 0).
  double max_rel_error_single_rank = 0.0;
  std::vector<std::string> failures;

  std::string to_text() const;
  std::string to_json() const;
};

/// Random oracle-equivalence configs over spec.ranks plus the collective
/// reference suite. Never throws for mismatches; they land in failures.
ValidationReport run_validate(const SweepSpec& spec, const fabric::CostModel& model);

/// Shortest round-trip decimal form.
std::string format_number(double v);
std::string format_rows(std::span<const BenchRow> rows, Format format);

/// Writes via a temporary sibling and rename, so readers never see a
/// partial file.
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace embsim::bench
