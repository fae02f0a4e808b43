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

#include "embsim/core/sharding.h"

#include <algorithm>
#include <string>

#include "embsim/core/errors.h"

namespace embsim {

std::string_view to_string(ShardingStrategy s) {
  switch (s) {
    case ShardingStrategy::RowWise: return "row-wise";
    case ShardingStrategy::TableWise: return "table-wise";
    case ShardingStrategy::ColumnWise: return "column-wise";
  }
  return "unknown";
}

std::vector<RowRange> plan_row_wise(std::uint64_t num_rows,
                                    std::uint32_t num_ranks) {
  if (num_ranks == 0) throw ConfigError("row-wise plan needs at least one rank");
  if (num_rows == 0) throw ConfigError("row-wise plan needs at least one row");
  if (num_ranks > num_rows) {
    throw ConfigError("row-wise plan: " + std::to_string(num_ranks) +
                      " ranks for " + std::to_string(num_rows) +
                      " rows would leave a rank without rows");
  }
  const std::uint64_t base = num_rows / num_ranks;
  const std::uint64_t extra = num_rows % num_ranks;
  std::vector<RowRange> ranges(num_ranks);
  std::uint64_t start = 0;
  for (std::uint32_t r = 0; r < num_ranks; ++r) {
    const std::uint64_t n = base + (r < extra ? 1 : 0);
    ranges[r] = {start, start + n};
    start += n;
  }
  return ranges;
}

ShardingPlan ShardingPlan::row_wise(std::span<const std::uint64_t> table_rows,
                                    std::uint32_t num_ranks) {
  std::vector<std::vector<RowRange>> ranges;
  ranges.reserve(table_rows.size());
  for (std::uint64_t rows : table_rows) {
    ranges.push_back(plan_row_wise(rows, num_ranks));
  }
  return ShardingPlan(ShardingStrategy::RowWise, num_ranks, std::move(ranges));
}

ShardingPlan::ShardingPlan(ShardingStrategy strategy, std::uint32_t num_ranks,
                           std::vector<std::vector<RowRange>> row_ranges)
    : strategy_(strategy), num_ranks_(num_ranks),
      row_ranges_(std::move(row_ranges)) {
  if (num_ranks_ == 0) throw ConfigError("sharding plan needs at least one rank");
  for (std::size_t t = 0; t < row_ranges_.size(); ++t) {
    const auto& rr = row_ranges_[t];
    if (rr.size() != num_ranks_) {
      throw ConfigError("table " + std::to_string(t) + ": " +
                        std::to_string(rr.size()) + " ranges for " +
                        std::to_string(num_ranks_) + " ranks");
    }
    std::uint64_t expect = 0;
    for (const RowRange& r : rr) {
      if (r.begin != expect || r.end < r.begin) {
        throw ConfigError("table " + std::to_string(t) +
                          ": row ranges must tile [0, R) in rank order");
      }
      expect = r.end;
    }
  }
}

std::uint64_t ShardingPlan::num_rows(std::size_t table) const {
  if (table >= row_ranges_.size()) {
    throw OutOfRangeError("sharding plan has no table " + std::to_string(table));
  }
  return row_ranges_[table].back().end;
}

const RowRange& ShardingPlan::range(std::size_t table,
                                    std::uint32_t rank) const {
  if (table >= row_ranges_.size() || rank >= num_ranks_) {
    throw OutOfRangeError("sharding plan: no range for table " +
                          std::to_string(table) + ", rank " +
                          std::to_string(rank));
  }
  return row_ranges_[table][rank];
}

RowOwner ShardingPlan::owner_of_row(std::size_t table, std::uint64_t row) const {
  const std::uint64_t rows = num_rows(table);
  if (row >= rows) {
    throw OutOfRangeError("table " + std::to_string(table) + ": row " +
                          std::to_string(row) + " >= " + std::to_string(rows) +
                          " rows");
  }
  const auto& rr = row_ranges_[table];
  // First range whose end is past the row; empty ranges are skipped.
  auto it = std::upper_bound(
      rr.begin(), rr.end(), row,
      [](std::uint64_t r, const RowRange& range) { return r < range.end; });
  const auto rank = static_cast<std::uint32_t>(it - rr.begin());
  return {rank, row - it->begin};
}

}  // namespace embsim
