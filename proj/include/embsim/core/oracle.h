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

#include <span>

#include "embsim/core/types.h"

namespace embsim {

/// Single-device embedding bag, used as the reference for the sharded path.
///
/// Output row b is the fp32 sum, in index-array order, of the table rows in
/// bag b, accumulated into a zero vector; empty bags stay zero. Throws
/// ShapeError when sum(lengths) != |indices| and OutOfRangeError (naming the
/// table, position and index) for an index >= R.
PooledMatrix oracle_embedding_bag(const EmbeddingTable& table,
                                  std::span<const RowIndex> indices,
                                  std::span<const BagLength> lengths);

/// Oracle applied to every table of a batch. tables[t] pairs with
/// batch.tables[t].
PooledOutput oracle_embedding_bag(std::span<const EmbeddingTable> tables,
                                  const JaggedBatch& batch);

}  // namespace embsim
