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

#include "embsim/core/oracle.h"

#include <numeric>
#include <string>

#include "embsim/core/errors.h"

namespace embsim {

PooledMatrix oracle_embedding_bag(const EmbeddingTable& table,
                                  std::span<const RowIndex> indices,
                                  std::span<const BagLength> lengths) {
  const std::size_t total =
      std::accumulate(lengths.begin(), lengths.end(), std::size_t{0});
  if (total != indices.size()) {
    throw ShapeError("table " + std::to_string(table.table_id()) +
                     ": sum(lengths) = " + std::to_string(total) +
                     " but indices has " + std::to_string(indices.size()) +
                     " entries");
  }
  const std::uint32_t dim = table.dim();
  PooledMatrix out(table.table_id(), lengths.size(), dim);
  std::size_t pos = 0;
  for (std::size_t b = 0; b < lengths.size(); ++b) {
    std::span<float> acc = out.row(b);
    for (BagLength k = 0; k < lengths[b]; ++k, ++pos) {
      const RowIndex idx = indices[pos];
      if (idx >= table.num_rows()) {
        throw OutOfRangeError("table " + std::to_string(table.table_id()) +
                              ", position " + std::to_string(pos) +
                              ": index " + std::to_string(idx) + " >= " +
                              std::to_string(table.num_rows()) + " rows");
      }
      std::span<const float> row = table.row(idx);
      for (std::uint32_t d = 0; d < dim; ++d) acc[d] += row[d];
    }
  }
  return out;
}

PooledOutput oracle_embedding_bag(std::span<const EmbeddingTable> tables,
                                  const JaggedBatch& batch) {
  if (tables.size() != batch.tables.size()) {
    throw ShapeError("oracle: " + std::to_string(tables.size()) +
                     " tables but batch has " +
                     std::to_string(batch.tables.size()));
  }
  PooledOutput out;
  out.reserve(tables.size());
  for (std::size_t t = 0; t < tables.size(); ++t) {
    out.push_back(oracle_embedding_bag(tables[t], batch.tables[t].indices,
                                       batch.tables[t].lengths));
  }
  return out;
}

}  // namespace embsim
