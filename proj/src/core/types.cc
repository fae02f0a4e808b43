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

#include "embsim/core/types.h"

#include <cmath>
#include <numeric>
#include <string>

#include "embsim/core/errors.h"

namespace embsim {

EmbeddingTable::EmbeddingTable(TableId table_id, std::uint64_t num_rows,
                               std::uint32_t dim, std::vector<float> values)
    : table_id_(table_id), num_rows_(num_rows), dim_(dim),
      values_(std::move(values)) {
  if (num_rows_ == 0 || dim_ == 0) {
    throw ShapeError("embedding table " + std::to_string(table_id_) +
                     ": rows and dim must be positive");
  }
  if (values_.size() != num_rows_ * dim_) {
    throw ShapeError("embedding table " + std::to_string(table_id_) +
                     ": expected " + std::to_string(num_rows_ * dim_) +
                     " values, got " + std::to_string(values_.size()));
  }
  for (float v : values_) {
    if (!std::isfinite(v)) {
      throw ShapeError("embedding table " + std::to_string(table_id_) +
                       ": non-finite value");
    }
  }
}

EmbeddingTable EmbeddingTable::scaled(float factor) const {
  std::vector<float> v(values_);
  for (float& x : v) x *= factor;
  return EmbeddingTable(table_id_, num_rows_, dim_, std::move(v));
}

std::vector<std::size_t> TableBatch::offsets() const {
  std::vector<std::size_t> out(lengths.size() + 1, 0);
  for (std::size_t b = 0; b < lengths.size(); ++b) {
    out[b + 1] = out[b] + lengths[b];
  }
  return out;
}

std::size_t JaggedBatch::total_indices() const {
  std::size_t n = 0;
  for (const auto& t : tables) n += t.indices.size();
  return n;
}

void validate_batch(const JaggedBatch& batch,
                    std::span<const std::uint64_t> table_rows) {
  if (batch.tables.size() != table_rows.size()) {
    throw ShapeError("batch has " + std::to_string(batch.tables.size()) +
                     " tables, expected " + std::to_string(table_rows.size()));
  }
  const std::size_t b = batch.batch_size();
  for (std::size_t t = 0; t < batch.tables.size(); ++t) {
    const TableBatch& tb = batch.tables[t];
    if (tb.batch_size() != b) {
      throw ShapeError("table " + std::to_string(tb.table_id) +
                       ": batch size " + std::to_string(tb.batch_size()) +
                       " differs from " + std::to_string(b));
    }
    const std::size_t total = std::accumulate(
        tb.lengths.begin(), tb.lengths.end(), std::size_t{0});
    if (total != tb.indices.size()) {
      throw ShapeError("table " + std::to_string(tb.table_id) +
                       ": sum(lengths) = " + std::to_string(total) +
                       " but indices has " + std::to_string(tb.indices.size()) +
                       " entries");
    }
    for (std::size_t i = 0; i < tb.indices.size(); ++i) {
      if (tb.indices[i] >= table_rows[t]) {
        throw OutOfRangeError("table " + std::to_string(tb.table_id) +
                              ", position " + std::to_string(i) + ": index " +
                              std::to_string(tb.indices[i]) + " >= " +
                              std::to_string(table_rows[t]) + " rows");
      }
    }
  }
}

}  // namespace embsim
