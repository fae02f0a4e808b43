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

#include "embsim/core/synth.h"

#include <string>

#include "embsim/core/errors.h"

namespace embsim {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
}  // namespace

std::uint64_t SplitMix64::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t SplitMix64::next() {
  state_ += kGolden;
  return mix(state_);
}

SplitMix64 SplitMix64::split(std::uint64_t stream) const {
  return SplitMix64(mix(seed_ ^ mix(stream + kGolden)));
}

float SplitMix64::uniform_pm1() {
  const auto bits = static_cast<std::uint32_t>(next() >> 40);  // 24 bits
  return static_cast<float>(bits) * 0x1.0p-23f - 1.0f;
}

__extension__ using Wide = unsigned __int128;

std::uint64_t SplitMix64::uniform_below(std::uint64_t bound) {
  Wide m = static_cast<Wide>(next()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = -bound % bound;
    while (low < threshold) {
      m = static_cast<Wide>(next()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

EmbeddingTable synth_table(std::uint64_t seed, std::uint64_t num_rows,
                           std::uint32_t dim, TableId table_id) {
  if (num_rows == 0 || dim == 0) {
    throw ConfigError("synth_table: rows and dim must be positive");
  }
  SplitMix64 rng(seed);
  std::vector<float> values(num_rows * dim);
  for (float& v : values) v = rng.uniform_pm1();
  return EmbeddingTable(table_id, num_rows, dim, std::move(values));
}

std::vector<EmbeddingTable> synth_tables(std::uint64_t seed,
                                         std::uint32_t count,
                                         std::uint64_t num_rows,
                                         std::uint32_t dim) {
  const SplitMix64 root(seed);
  std::vector<EmbeddingTable> tables;
  tables.reserve(count);
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::uint64_t table_seed = root.split(t).next();
    tables.push_back(synth_table(table_seed, num_rows, dim, t));
  }
  return tables;
}

JaggedBatch synth_batch(std::uint64_t seed, std::uint32_t rank,
                        std::uint32_t batch_size,
                        std::span<const std::uint64_t> table_rows,
                        std::uint32_t pooling, PoolingMode mode) {
  const SplitMix64 rank_stream = SplitMix64(seed).split(rank);
  JaggedBatch batch;
  batch.tables.reserve(table_rows.size());
  for (std::size_t t = 0; t < table_rows.size(); ++t) {
    if (pooling > table_rows[t]) {
      throw ConfigError("pooling " + std::to_string(pooling) +
                        " exceeds the " + std::to_string(table_rows[t]) +
                        " rows of table " + std::to_string(t));
    }
    SplitMix64 rng = rank_stream.split(t);
    TableBatch tb;
    tb.table_id = static_cast<TableId>(t);
    tb.lengths.resize(batch_size);
    for (auto& len : tb.lengths) {
      len = mode == PoolingMode::Constant
                ? pooling
                : static_cast<BagLength>(rng.uniform_below(pooling + 1ull));
    }
    std::size_t total = 0;
    for (auto len : tb.lengths) total += len;
    tb.indices.resize(total);
    for (auto& idx : tb.indices) idx = rng.uniform_below(table_rows[t]);
    batch.tables.push_back(std::move(tb));
  }
  return batch;
}

}  // namespace embsim
