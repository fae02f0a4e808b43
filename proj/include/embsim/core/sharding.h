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
#include <string_view>
#include <vector>

#include "embsim/core/types.h"

namespace embsim {

enum class ShardingStrategy { RowWise, TableWise, ColumnWise };

std::string_view to_string(ShardingStrategy s);

/// Half-open row interval [begin, end).
struct RowRange {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;

  std::uint64_t size() const { return end - begin; }
  bool contains(std::uint64_t row) const { return row >= begin && row < end; }
  friend bool operator==(const RowRange&, const RowRange&) = default;
};

struct RowOwner {
  std::uint32_t rank = 0;
  std::uint64_t local_row = 0;
  friend bool operator==(const RowOwner&, const RowOwner&) = default;
};

/// Contiguous even split: every rank gets floor(R/G) rows and the first
/// R mod G ranks one more. Throws ConfigError when G == 0, R == 0 or G > R.
std::vector<RowRange> plan_row_wise(std::uint64_t num_rows,
                                    std::uint32_t num_ranks);

class ShardingPlan {
 public:
  /// Row-wise plan over tables with the given row counts.
  static ShardingPlan row_wise(std::span<const std::uint64_t> table_rows,
                               std::uint32_t num_ranks);

  /// A plan of another strategy. Representable so callers can describe it;
  /// only RowWise plans can be executed.
  ShardingPlan(ShardingStrategy strategy, std::uint32_t num_ranks,
               std::vector<std::vector<RowRange>> row_ranges);

  ShardingStrategy strategy() const { return strategy_; }
  std::uint32_t num_ranks() const { return num_ranks_; }
  std::size_t num_tables() const { return row_ranges_.size(); }
  std::uint64_t num_rows(std::size_t table) const;
  const RowRange& range(std::size_t table, std::uint32_t rank) const;
  const std::vector<std::vector<RowRange>>& row_ranges() const {
    return row_ranges_;
  }

  /// Rank holding `row` of `table`, and the row's offset in that shard.
  /// Throws OutOfRangeError for an unknown table or row >= R.
  RowOwner owner_of_row(std::size_t table, std::uint64_t row) const;

 private:
  ShardingStrategy strategy_;
  std::uint32_t num_ranks_;
  std::vector<std::vector<RowRange>> row_ranges_;
};

}  // namespace embsim
