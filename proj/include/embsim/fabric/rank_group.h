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

#include <condition_variable>
#include <coroutine>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <source_location>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "embsim/fabric/cost_model.h"
#include "embsim/fabric/task.h"

namespace embsim::fabric {

/// How rank programs are executed. Both produce identical results and
/// clocks; only host-side interleaving differs.
enum class Scheduler {
  RoundRobin,  // one host thread; ranks resumed in rank order each round
  Concurrent,  // one host thread per rank, blocking rendezvous
};

std::string_view to_string(Scheduler s);
Scheduler parse_scheduler(std::string_view name);

/// Per-rank simulated time in microseconds.
class SimClock {
 public:
  explicit SimClock(std::uint32_t ranks) : now_(ranks, 0.0) {}

  double now(std::uint32_t rank) const { return now_.at(rank); }
  std::span<const double> values() const { return now_; }

  /// Local work on one rank. Negative durations are rejected.
  void advance_local(std::uint32_t rank, double us);
  /// Every participant leaves at max(entry clocks) + us.
  void advance_collective(std::span<const std::uint32_t> participants, double us);

 private:
  std::vector<double> now_;
};

/// One rank's half of a collective call. Every rank constructs an op of the
/// same dynamic type; once all have arrived the group calls execute() on
/// rank 0's op with the whole set.
class CollectiveOp {
 public:
  /// kind == nullopt marks a zero-cost synchronization (barrier).
  CollectiveOp(std::optional<CollectiveKind> kind, std::string_view name,
               std::source_location where)
      : kind_(kind), name_(name), where_(where) {}
  virtual ~CollectiveOp() = default;

  std::optional<CollectiveKind> kind() const { return kind_; }
  std::string_view name() const { return name_; }
  const std::source_location& where() const { return where_; }
  std::uint64_t sequence() const { return sequence_; }
  /// "all_reduce at file.cc:42 (call #3)"
  std::string describe() const;

  /// Moves data between ops[0..G) and returns the per-rank message size in
  /// bytes used for costing. Throws ProtocolError on shape disagreement.
  virtual double execute(std::span<CollectiveOp* const> ops) = 0;

 protected:
  [[noreturn]] void mismatch(std::uint32_t rank, const std::string& detail) const;

 private:
  friend class RankGroup;

  std::optional<CollectiveKind> kind_;
  std::string_view name_;
  std::source_location where_;
  std::uint64_t sequence_ = 0;
};

/// One record per executed collective, in execution order.
struct CollectiveEvent {
  std::string name;
  std::optional<CollectiveKind> kind;
  double msg_bytes = 0.0;
  double start_us = 0.0;
  double duration_us = 0.0;
};

struct GroupConfig {
  std::uint32_t num_ranks = 1;
  Backend backend = Backend::CollectiveOptimized;
  /// Non-owning; must outlive the group. Null means the default model.
  const CostModel* cost_model = nullptr;
  Scheduler scheduler = Scheduler::RoundRobin;
};

class RankGroup;

/// Handle a rank program uses to reach its group.
class RankContext {
 public:
  struct CollectiveAwaiter {
    RankGroup* group;
    std::uint32_t rank;
    CollectiveOp* op;
    bool await_ready();
    void await_suspend(std::coroutine_handle<> h);
    void await_resume() const noexcept {}
  };

  std::uint32_t rank() const { return rank_; }
  std::uint32_t size() const;
  Backend backend() const;
  const CostModel& cost_model() const;
  double clock() const;

  void advance_local(double us);

  /// Parks this rank at `op` until every rank has submitted a matching op.
  CollectiveAwaiter submit(CollectiveOp& op) { return {group_, rank_, &op}; }

 private:
  friend class RankGroup;
  RankContext(RankGroup* group, std::uint32_t rank) : group_(group), rank_(rank) {}

  RankGroup* group_;
  std::uint32_t rank_;
};

class BarrierOp final : public CollectiveOp {
 public:
  explicit BarrierOp(std::source_location where = std::source_location::current())
      : CollectiveOp(std::nullopt, "barrier", where) {}
  double execute(std::span<CollectiveOp* const>) override { return 0.0; }
};

/// Top-level coroutine of one rank, as seen by the scheduler.
struct RankProgram {
  std::coroutine_handle<> handle;
  detail::PromiseBase* promise;
};

class RankGroup {
 public:
  explicit RankGroup(const GroupConfig& config);
  RankGroup(const RankGroup&) = delete;
  RankGroup& operator=(const RankGroup&) = delete;

  std::uint32_t size() const { return config_.num_ranks; }
  Backend backend() const { return config_.backend; }
  Scheduler scheduler() const { return config_.scheduler; }
  const CostModel& cost_model() const { return *model_; }
  RankContext& context(std::uint32_t rank) { return contexts_.at(rank); }
  const SimClock& clock() const { return clock_; }
  SimClock& clock() { return clock_; }
  const std::vector<CollectiveEvent>& trace() const { return trace_; }

  /// Drives programs[r] (rank r) to completion. Rethrows the failure of the
  /// lowest failing rank, or a ProtocolError when ranks disagree.
  void run(std::span<const RankProgram> programs);

 private:
  friend struct RankContext::CollectiveAwaiter;

  bool arrive(std::uint32_t rank, CollectiveOp& op);
  void park(std::uint32_t rank, std::coroutine_handle<> h);
  void execute_collective();

  void run_round_robin(std::span<const RankProgram> programs);
  void run_concurrent(std::span<const RankProgram> programs);
  void on_exit(std::uint32_t rank, bool failed);
  void abort_locked(std::exception_ptr reason);

  GroupConfig config_;
  const CostModel* model_;
  std::vector<RankContext> contexts_;
  SimClock clock_;
  std::vector<std::uint32_t> all_ranks_;
  std::vector<CollectiveOp*> slots_;
  std::vector<std::coroutine_handle<>> parked_;
  std::vector<std::uint64_t> calls_;
  std::vector<CollectiveEvent> trace_;

  // Concurrent scheduler rendezvous.
  std::mutex mu_;
  std::condition_variable cv_;
  std::uint32_t arrived_ = 0;
  std::uint32_t exited_ = 0;
  std::uint64_t generation_ = 0;
  bool aborted_ = false;
  std::exception_ptr abort_reason_;
};

template <typename T>
struct SpmdResult {
  std::vector<T> values;
  std::vector<double> clocks;
  std::vector<CollectiveEvent> trace;
};

namespace detail {
template <typename>
struct TaskValue;
template <typename T>
struct TaskValue<Task<T>> {
  using type = T;
};
}  // namespace detail

/// Runs `program(ctx)` on every rank of a fresh group. `program` returns a
/// Task<T>; per-rank results come back in rank order with final clocks.
template <typename Program>
auto spawn_spmd(const GroupConfig& config, Program&& program) {
  using TaskT = std::invoke_result_t<Program&, RankContext&>;
  using T = typename detail::TaskValue<TaskT>::type;

  RankGroup group(config);
  std::vector<TaskT> tasks;
  tasks.reserve(group.size());
  for (std::uint32_t r = 0; r < group.size(); ++r) {
    tasks.push_back(program(group.context(r)));
  }
  std::vector<RankProgram> programs;
  programs.reserve(tasks.size());
  for (auto& t : tasks) programs.push_back({t.handle(), &t.promise()});
  group.run(programs);

  SpmdResult<T> out;
  out.values.reserve(tasks.size());
  for (auto& t : tasks) out.values.push_back(t.take());
  const auto clocks = group.clock().values();
  out.clocks.assign(clocks.begin(), clocks.end());
  out.trace = group.trace();
  return out;
}

}  // namespace embsim::fabric
