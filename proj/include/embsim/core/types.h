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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace embsim {

using RowIndex = std::uint64_t;
using BagLength = std::uint32_t;
using TableId = std::uint32_t;

inline constexpr std::size_t kElementBytes = sizeof(float);
inline constexpr std::size_t kIndexBytes = sizeof(RowIndex);

/// Dense row-major R x D fp32 matrix, one per categorical feature.
class EmbeddingTable {
 public:
  EmbeddingTable(TableId table_id, std::uint64_t num_rows, std::uint32_t dim,
                 std::vector<float> values);

  TableId table_id() const { return table_id_; }
  std::uint64_t num_rows() const { return num_rows_; }
  std::uint32_t dim() const { return dim_; }
  std::span<const float> values() const { return values_; }

  std::span<const float> row(std::uint64_t r) const {
    return {values_.data() + r * dim_, dim_};
  }

  /// Copy with every element multiplied by `factor`.
  EmbeddingTable scaled(float factor) const;

 private:
  TableId table_id_;
  std::uint64_t num_rows_;
  std::uint32_t dim_;
  std::vector<float> values_;
};

/// Indices/lengths pair for one table. Bag b covers
/// indices[offset(b), offset(b) + lengths[b]) where offset is the exclusive
/// prefix sum of lengths.
struct TableBatch {
  TableId table_id = 0;
  std::vector<RowIndex> indices;
  std::vector<BagLength> lengths;

  std::size_t batch_size() const { return lengths.size(); }
  /// Exclusive prefix sum of lengths, size batch_size() + 1.
  std::vector<std::size_t> offsets() const;
};

/// One rank's sparse input: a TableBatch per table, all with the same batch
/// size.
struct JaggedBatch {
  std::vector<TableBatch> tables;

  std::size_t batch_size() const {
    return tables.empty() ? 0 : tables.front().batch_size();
  }
  std::size_t total_indices() const;
};

/// Throws ShapeError when sum(lengths) != |indices| or batch sizes differ
/// between tables, OutOfRangeError when an index is >= the table's row count.
/// `table_rows[t]` is the row count of the table at position t.
void validate_batch(const JaggedBatch& batch,
                    std::span<const std::uint64_t> table_rows);

/// B x D pooled result for one table.
struct PooledMatrix {
  TableId table_id = 0;
  std::size_t batch_size = 0;
  std::uint32_t dim = 0;
  std::vector<float> values;

  PooledMatrix() = default;
  PooledMatrix(TableId id, std::size_t b, std::uint32_t d)
      : table_id(id), batch_size(b), dim(d), values(b * d, 0.0f) {}

  std::span<float> row(std::size_t b) { return {values.data() + b * dim, dim}; }
  std::span<const float> row(std::size_t b) const {
    return {values.data() + b * dim, dim};
  }
};

/// One PooledMatrix per table, in table order.
using PooledOutput = std::vector<PooledMatrix>;

}  // namespace embsim
