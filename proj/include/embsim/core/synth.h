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

#include <cstdint>
#include <span>
#include <vector>

#include "embsim/core/types.h"

namespace embsim {

/// SplitMix64 (Steele, Lea & Flood). State advances by 0x9E3779B97F4A7C15
/// and each output goes through the murmur3-style finalizer with
/// multipliers 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB (shifts 30/27/31).
///
/// split(k) derives an independent stream from the construction seed, so
/// per-table and per-rank streams do not depend on draw order.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next();
  SplitMix64 split(std::uint64_t stream) const;

  /// Uniform in [-1, 1) with 24 random mantissa bits (exact in fp32).
  float uniform_pm1();
  /// Uniform in [0, bound). Lemire's multiply-shift with rejection, so the
  /// result is unbiased. bound must be > 0.
  std::uint64_t uniform_below(std::uint64_t bound);

  static std::uint64_t mix(std::uint64_t z);

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

enum class PoolingMode {
  Constant,  // every bag holds exactly P indices
  Variable,  // bag sizes uniform in [0, P]
};

/// R x D table with values uniform in [-1, 1).
EmbeddingTable synth_table(std::uint64_t seed, std::uint64_t num_rows,
                           std::uint32_t dim, TableId table_id = 0);

/// `count` tables of identical shape, table t drawn from split(t).
std::vector<EmbeddingTable> synth_tables(std::uint64_t seed,
                                         std::uint32_t count,
                                         std::uint64_t num_rows,
                                         std::uint32_t dim);

/// One rank's batch over tables with the given row counts. Indices are
/// uniform over each table's rows. Throws ConfigError when P exceeds a
/// table's row count.
JaggedBatch synth_batch(std::uint64_t seed, std::uint32_t rank,
                        std::uint32_t batch_size,
                        std::span<const std::uint64_t> table_rows,
                        std::uint32_t pooling,
                        PoolingMode mode = PoolingMode::Constant);

}  // namespace embsim
