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

// bench: sweep and validation driver.
//
//   bench collectives --preset fig1 --out fig1.csv
//   bench embag --preset fig6-8 --format json --out fig6-8.json
//   bench projection --preset fig9
//   bench validate --ranks 1,2,4,8
//
// Exit status: 0 success, 1 validation failure, 2 configuration error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "embsim/bench/bench.h"
#include "embsim/core/errors.h"
#include "embsim/fabric/cost_model.h"

namespace {

using embsim::bench::Mode;
using embsim::bench::SweepSpec;

constexpr int kExitValidation = 1;
constexpr int kExitConfig = 2;

struct Flags {
  std::optional<std::string> preset;
  std::vector<std::uint32_t> ranks, batch, tables, pooling, dim;
  std::optional<std::uint64_t> rows;
  std::optional<std::string> backend;
  std::optional<std::string> calibration;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<std::string> scheduler;
  std::optional<std::uint32_t> configs;
  std::optional<std::uint64_t> min_bytes, max_bytes;
  std::vector<double> table_gib;
  bool inject_fault = false;
};

void add_common(CLI::App& cmd, Flags& f) {
  cmd.add_option("--preset", f.preset, "fig1 | fig6-8 | fig9 | sec5-single-table");
  cmd.add_option("--ranks", f.ranks, "rank counts")->delimiter(',');
  cmd.add_option("--batch", f.batch, "batch sizes")->delimiter(',');
  cmd.add_option("--tables", f.tables, "table counts")->delimiter(',');
  cmd.add_option("--rows", f.rows, "rows per table");
  cmd.add_option("--dim", f.dim, "embedding dimensions")->delimiter(',');
  cmd.add_option("--pooling", f.pooling, "pooling factors")->delimiter(',');
  cmd.add_option("--backend", f.backend, "collective-optimized | one-sided | both");
  cmd.add_option("--calibration", f.calibration, "calibration file (default: built in)");
  cmd.add_option("--seed", f.seed, "64-bit seed");
  cmd.add_option("--out", f.out, "output path (default: stdout)");
  cmd.add_option("--format", f.format, "csv | json");
  cmd.add_option("--scheduler", f.scheduler, "round-robin | concurrent");
}

SweepSpec build_spec(Mode mode, const Flags& f) {
  SweepSpec s = f.preset ? embsim::bench::preset(*f.preset) : SweepSpec{};
  if (f.preset && s.mode != mode) {
    throw embsim::ConfigError("preset '" + *f.preset + "' is for bench " +
                              std::string(embsim::bench::to_string(s.mode)));
  }
  s.mode = mode;
  if (!f.preset && mode == Mode::Validate) s.ranks = {1, 2, 4, 8};
  if (!f.ranks.empty()) s.ranks = f.ranks;
  if (!f.batch.empty()) s.batch = f.batch;
  if (!f.tables.empty()) s.tables = f.tables;
  if (!f.pooling.empty()) s.pooling = f.pooling;
  if (!f.dim.empty()) s.dim = f.dim;
  if (f.rows) s.rows = *f.rows;
  if (f.backend) s.backends = embsim::bench::parse_backends(*f.backend);
  if (f.seed) s.seed = *f.seed;
  if (f.out) s.out = *f.out;
  if (f.format) s.format = embsim::bench::parse_format(*f.format);
  if (f.scheduler) s.scheduler = embsim::fabric::parse_scheduler(*f.scheduler);
  if (f.configs) s.configs = *f.configs;
  if (f.min_bytes) s.min_bytes = *f.min_bytes;
  if (f.max_bytes) s.max_bytes = *f.max_bytes;
  if (!f.table_gib.empty()) {
    s.table_bytes.clear();
    for (double gib : f.table_gib) {
      if (!(gib > 0)) throw embsim::ConfigError("table sizes must be positive");
      s.table_bytes.push_back(static_cast<std::uint64_t>(gib * double(embsim::projector::kGiB)));
    }
  }
  s.inject_routing_fault = f.inject_fault;
  return s;
}

void emit(const SweepSpec& s, const std::string& content) {
  if (s.out.empty()) {
    std::cout << content;
  } else {
    embsim::bench::write_file_atomic(s.out, content);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Row-wise embedding bag simulator: sweeps and validation"};
  app.require_subcommand(1);

  Flags f;
  auto* collectives = app.add_subcommand("collectives", "collective cost curves");
  auto* embag = app.add_subcommand("embag", "embedding bag phase timings");
  auto* projection = app.add_subcommand("projection", "local vs distributed speedup");
  auto* validate = app.add_subcommand("validate", "oracle and collective checks");
  for (auto* cmd : {collectives, embag, projection, validate}) add_common(*cmd, f);
  collectives->add_option("--min-bytes", f.min_bytes, "smallest message");
  collectives->add_option("--max-bytes", f.max_bytes, "largest message");
  projection->add_option("--table-gib", f.table_gib, "table sizes in GiB")->delimiter(',');
  validate->add_option("--configs", f.configs, "random oracle configurations");
  validate->add_flag("--inject-routing-fault", f.inject_fault,
                     "corrupt one routed row per run (self-test)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    Mode mode = Mode::Collectives;
    if (*embag) mode = Mode::Embag;
    if (*projection) mode = Mode::Projection;
    if (*validate) mode = Mode::Validate;
    const SweepSpec spec = build_spec(mode, f);

    const embsim::fabric::CostModel model =
        f.calibration ? embsim::fabric::CostModel::load(*f.calibration)
                      : embsim::fabric::CostModel::default_model();

    if (mode == Mode::Validate) {
      const auto report = embsim::bench::run_validate(spec, model);
      const std::string text = report.to_text();
      if (spec.format == embsim::bench::Format::Json) {
        emit(spec, report.to_json());
        if (!spec.out.empty()) std::cout << text;
      } else {
        emit(spec, text);
        if (!spec.out.empty()) std::cout << text;
      }
      return report.passed ? 0 : kExitValidation;
    }

    std::vector<embsim::bench::BenchRow> rows;
    switch (mode) {
      case Mode::Collectives: rows = embsim::bench::run_collective_sweep(spec, model); break;
      case Mode::Embag: rows = embsim::bench::run_embag_sweep(spec, model); break;
      case Mode::Projection: rows = embsim::bench::run_projection(spec, model); break;
      case Mode::Validate: break;
    }
    emit(spec, embsim::bench::format_rows(rows, spec.format));
    return 0;
  } catch (const embsim::ValidationError& e) {
    std::cerr << "bench: validation failed: " << e.what() << "\n";
    return kExitValidation;
  } catch (const embsim::Error& e) {
    std::cerr << "bench: " << e.what() << "\n";
    return kExitConfig;
  }
}
