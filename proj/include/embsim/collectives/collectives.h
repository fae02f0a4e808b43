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

// Data semantics and cost accounting of the five collectives. Each call is
// a full-group rendezvous: every rank of the group must make the same call
// in the same order. Results are backend-independent; the backend only
// selects cost parameters, except that OneSided reduce_scatter is literally
// all_to_all followed by a local sum.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <source_location>
#include <span>
#include <string>
#include <vector>

#include "embsim/core/errors.h"
#include "embsim/fabric/rank_group.h"
#include "embsim/fabric/task.h"

namespace embsim::coll {

using fabric::CollectiveKind;
using fabric::RankContext;
using fabric::Task;

enum class ReduceOp { Sum, Max };

/// Bytes one element occupies on the wire. Specialize for padded structs.
template <typename T>
struct WireBytes {
  static constexpr std::size_t value = sizeof(T);
};
template <typename T>
inline constexpr std::size_t wire_bytes_v = WireBytes<T>::value;

namespace detail {

inline void require_sum(ReduceOp op, std::string_view who) {
  if (op != ReduceOp::Sum) {
    throw UnimplementedError(std::string(who) + ": only sum reduction is implemented");
  }
}

template <typename Op>
Op& peer(std::span<fabric::CollectiveOp* const> ops, std::size_t r) {
  return static_cast<Op&>(*ops[r]);
}

template <typename T>
class AllReduceOp final : public fabric::CollectiveOp {
 public:
  AllReduceOp(std::span<const T> in, std::source_location loc)
      : CollectiveOp(CollectiveKind::AllReduce, "all_reduce", loc), in_(in) {}

  double execute(std::span<fabric::CollectiveOp* const> ops) override {
    const std::size_t n = in_.size();
    for (std::size_t r = 1; r < ops.size(); ++r) {
      if (peer<AllReduceOp>(ops, r).in_.size() != n) {
        mismatch(r, "supplied " + std::to_string(peer<AllReduceOp>(ops, r).in_.size()) +
                        " elements, rank 0 supplied " + std::to_string(n));
      }
    }
    std::vector<T> sum(n, T{});
    for (std::size_t r = 0; r < ops.size(); ++r) {
      const auto in = peer<AllReduceOp>(ops, r).in_;
      for (std::size_t i = 0; i < n; ++i) sum[i] += in[i];
    }
    for (std::size_t r = 0; r < ops.size(); ++r) peer<AllReduceOp>(ops, r).out = sum;
    return static_cast<double>(n * wire_bytes_v<T>);
  }

  std::vector<T> out;

 private:
  std::span<const T> in_;
};

template <typename T>
class AllGatherOp final : public fabric::CollectiveOp {
 public:
  AllGatherOp(std::span<const T> in, std::source_location loc)
      : CollectiveOp(CollectiveKind::AllGather, "all_gather", loc), in_(in) {}

  double execute(std::span<fabric::CollectiveOp* const> ops) override {
    const std::size_t n = in_.size();
    std::vector<T> cat;
    cat.reserve(n * ops.size());
    for (std::size_t r = 0; r < ops.size(); ++r) {
      const auto in = peer<AllGatherOp>(ops, r).in_;
      if (in.size() != n) {
        mismatch(r, "supplied " + std::to_string(in.size()) +
                        " elements, rank 0 supplied " + std::to_string(n));
      }
      cat.insert(cat.end(), in.begin(), in.end());
    }
    for (std::size_t r = 0; r < ops.size(); ++r) peer<AllGatherOp>(ops, r).out = cat;
    return static_cast<double>(n * wire_bytes_v<T>);
  }

  std::vector<T> out;

 private:
  std::span<const T> in_;
};

// Equal-chunk all-to-all: send holds G chunks of send.size()/G elements.
template <typename T>
class AllToAllOp final : public fabric::CollectiveOp {
 public:
  AllToAllOp(std::span<const T> send, std::source_location loc)
      : CollectiveOp(CollectiveKind::AllToAll, "all_to_all", loc), send_(send) {}

  double execute(std::span<fabric::CollectiveOp* const> ops) override {
    const std::size_t g = ops.size();
    const std::size_t total = send_.size();
    for (std::size_t r = 1; r < g; ++r) {
      if (peer<AllToAllOp>(ops, r).send_.size() != total) {
        mismatch(r, "sent " + std::to_string(peer<AllToAllOp>(ops, r).send_.size()) +
                        " elements, rank 0 sent " + std::to_string(total));
      }
    }
    const std::size_t chunk = total / g;
    for (std::size_t dst = 0; dst < g; ++dst) {
      auto& out = peer<AllToAllOp>(ops, dst).out;
      out.clear();
      out.reserve(total);
      for (std::size_t src = 0; src < g; ++src) {
        const auto s = peer<AllToAllOp>(ops, src).send_.subspan(dst * chunk, chunk);
        out.insert(out.end(), s.begin(), s.end());
      }
    }
    return static_cast<double>(total * wire_bytes_v<T>);
  }

  std::vector<T> out;

 private:
  std::span<const T> send_;
};

// Variable-size all-to-all payload exchange. `expected` holds the counts
// this rank learned from the prologue, one per source rank.
template <typename T>
class AllToAllVOp final : public fabric::CollectiveOp {
 public:
  AllToAllVOp(const std::vector<std::vector<T>>& send,
              std::span<const std::uint64_t> expected, std::source_location loc)
      : CollectiveOp(CollectiveKind::AllToAll, "all_to_all_v", loc),
        send_(send), expected_(expected) {}

  double execute(std::span<fabric::CollectiveOp* const> ops) override {
    const std::size_t g = ops.size();
    std::size_t max_send = 0;
    for (std::size_t r = 0; r < g; ++r) {
      const auto& op = peer<AllToAllVOp>(ops, r);
      if (op.send_.size() != g) {
        mismatch(r, "supplied " + std::to_string(op.send_.size()) + " chunks for " +
                        std::to_string(g) + " ranks");
      }
      std::size_t bytes = 0;
      for (const auto& c : op.send_) bytes += c.size() * wire_bytes_v<T>;
      max_send = std::max(max_send, bytes);
    }
    for (std::size_t dst = 0; dst < g; ++dst) {
      auto& op = peer<AllToAllVOp>(ops, dst);
      op.out.assign(g, {});
      for (std::size_t src = 0; src < g; ++src) {
        const auto& chunk = peer<AllToAllVOp>(ops, src).send_[dst];
        if (chunk.size() != op.expected_[src]) {
          mismatch(dst, "expected " + std::to_string(op.expected_[src]) +
                            " elements from rank " + std::to_string(src) +
                            " but " + std::to_string(chunk.size()) + " were sent");
        }
        op.out[src] = chunk;
      }
    }
    return static_cast<double>(max_send);
  }

  std::vector<std::vector<T>> out;

 private:
  const std::vector<std::vector<T>>& send_;
  std::span<const std::uint64_t> expected_;
};

template <typename T>
class BroadcastOp final : public fabric::CollectiveOp {
 public:
  BroadcastOp(std::uint32_t root, std::span<const T> in, std::source_location loc)
      : CollectiveOp(CollectiveKind::Broadcast, "broadcast", loc), root_(root), in_(in) {}

  double execute(std::span<fabric::CollectiveOp* const> ops) override {
    for (std::size_t r = 1; r < ops.size(); ++r) {
      const auto& op = peer<BroadcastOp>(ops, r);
      if (op.root_ != root_) {
        mismatch(r, "named root " + std::to_string(op.root_) + ", rank 0 named " +
                        std::to_string(root_));
      }
      if (op.in_.size() != in_.size()) {
        mismatch(r, "supplied " + std::to_string(op.in_.size()) +
                        " elements, rank 0 supplied " + std::to_string(in_.size()));
      }
    }
    const auto src = peer<BroadcastOp>(ops, root_).in_;
    for (std::size_t r = 0; r < ops.size(); ++r) {
      peer<BroadcastOp>(ops, r).out.assign(src.begin(), src.end());
    }
    return static_cast<double>(src.size() * wire_bytes_v<T>);
  }

  std::vector<T> out;

 private:
  std::uint32_t root_;
  std::span<const T> in_;
};

// Native reduce-scatter (CollectiveOptimized only).
template <typename T>
class ReduceScatterOp final : public fabric::CollectiveOp {
 public:
  ReduceScatterOp(std::span<const T> in, std::source_location loc)
      : CollectiveOp(CollectiveKind::ReduceScatter, "reduce_scatter", loc), in_(in) {}

  double execute(std::span<fabric::CollectiveOp* const> ops) override {
    const std::size_t g = ops.size();
    const std::size_t total = in_.size();
    for (std::size_t r = 1; r < g; ++r) {
      if (peer<ReduceScatterOp>(ops, r).in_.size() != total) {
        mismatch(r, "supplied " + std::to_string(peer<ReduceScatterOp>(ops, r).in_.size()) +
                        " elements, rank 0 supplied " + std::to_string(total));
      }
    }
    const std::size_t n = total / g;
    for (std::size_t dst = 0; dst < g; ++dst) {
      std::vector<T> acc(n, T{});
      for (std::size_t src = 0; src < g; ++src) {
        const auto chunk = peer<ReduceScatterOp>(ops, src).in_.subspan(dst * n, n);
        for (std::size_t i = 0; i < n; ++i) acc[i] += chunk[i];
      }
      peer<ReduceScatterOp>(ops, dst).out = std::move(acc);
    }
    return static_cast<double>(total * wire_bytes_v<T>);
  }

  std::vector<T> out;

 private:
  std::span<const T> in_;
};

}  // namespace detail

/// Every rank ends with the element-wise sum of all ranks' buffers.
template <typename T>
Task<std::vector<T>> all_reduce(RankContext& ctx, std::span<const T> in,
                                ReduceOp op = ReduceOp::Sum,
                                std::source_location loc = std::source_location::current()) {
  detail::require_sum(op, "all_reduce");
  detail::AllReduceOp<T> c(in, loc);
  co_await ctx.submit(c);
  co_return std::move(c.out);
}

/// Every rank ends with input[0] ++ input[1] ++ ... ++ input[G-1].
template <typename T>
Task<std::vector<T>> all_gather(RankContext& ctx, std::span<const T> in,
                                std::source_location loc = std::source_location::current()) {
  detail::AllGatherOp<T> c(in, loc);
  co_await ctx.submit(c);
  co_return std::move(c.out);
}

/// `send` is G equal chunks, chunk g destined for rank g. Rank r receives
/// chunk r of every rank, in sender order. Throws ShapeError when |send| is
/// not divisible by G.
template <typename T>
Task<std::vector<T>> all_to_all(RankContext& ctx, std::span<const T> send,
                                std::source_location loc = std::source_location::current()) {
  if (send.size() % ctx.size() != 0) {
    throw ShapeError("all_to_all: " + std::to_string(send.size()) +
                     " elements do not split into " + std::to_string(ctx.size()) +
                     " chunks");
  }
  detail::AllToAllOp<T> c(send, loc);
  co_await ctx.submit(c);
  co_return std::move(c.out);
}

/// Variable-size all-to-all. A prologue all_to_all of one 64-bit count per
/// peer tells every rank what to expect, then the payload moves. Returns
/// the received chunks indexed by sender.
template <typename T>
Task<std::vector<std::vector<T>>> all_to_all_v(
    RankContext& ctx, std::vector<std::vector<T>> chunks,
    std::source_location loc = std::source_location::current()) {
  if (chunks.size() != ctx.size()) {
    throw ShapeError("all_to_all_v: " + std::to_string(chunks.size()) +
                     " chunks for " + std::to_string(ctx.size()) + " ranks");
  }
  std::vector<std::uint64_t> counts(chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) counts[i] = chunks[i].size();
  detail::AllToAllOp<std::uint64_t> prologue(counts, loc);
  co_await ctx.submit(prologue);
  detail::AllToAllVOp<T> c(chunks, prologue.out, loc);
  co_await ctx.submit(c);
  co_return std::move(c.out);
}

/// Every rank ends with root's buffer. All ranks pass buffers of the same
/// length; only root's contents matter. Throws ConfigError when root >= G.
template <typename T>
Task<std::vector<T>> broadcast(RankContext& ctx, std::uint32_t root, std::span<const T> in,
                               std::source_location loc = std::source_location::current()) {
  if (root >= ctx.size()) {
    throw ConfigError("broadcast: root " + std::to_string(root) + " outside group of " +
                      std::to_string(ctx.size()));
  }
  detail::BroadcastOp<T> c(root, in, loc);
  co_await ctx.submit(c);
  co_return std::move(c.out);
}

/// `in` is G chunks of N; rank r ends with the sum over ranks of chunk r,
/// accumulated in rank order. Under OneSided this is all_to_all plus a
/// local sum charged at the local reduction rate.
template <typename T>
Task<std::vector<T>> reduce_scatter(RankContext& ctx, std::span<const T> in,
                                    ReduceOp op = ReduceOp::Sum,
                                    std::source_location loc = std::source_location::current()) {
  detail::require_sum(op, "reduce_scatter");
  const std::size_t g = ctx.size();
  if (in.size() % g != 0) {
    throw ShapeError("reduce_scatter: " + std::to_string(in.size()) +
                     " elements do not split into " + std::to_string(g) + " chunks");
  }
  if (ctx.backend() == fabric::Backend::CollectiveOptimized) {
    detail::ReduceScatterOp<T> c(in, loc);
    co_await ctx.submit(c);
    co_return std::move(c.out);
  }

  detail::AllToAllOp<T> exchange(in, loc);
  co_await ctx.submit(exchange);
  const std::size_t n = in.size() / g;
  std::vector<T> acc(n, T{});
  for (std::size_t src = 0; src < g; ++src) {
    const T* chunk = exchange.out.data() + src * n;
    for (std::size_t i = 0; i < n; ++i) acc[i] += chunk[i];
  }
  ctx.advance_local(
      ctx.cost_model().local_reduce_cost(static_cast<double>(in.size() * wire_bytes_v<T>)));
  co_return acc;
}

/// Zero-cost synchronization; clocks leave at the group maximum.
inline Task<int> barrier(RankContext& ctx,
                         std::source_location loc = std::source_location::current()) {
  fabric::BarrierOp b(loc);
  co_await ctx.submit(b);
  co_return 0;
}

}  // namespace embsim::coll
