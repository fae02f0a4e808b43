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

#include "embsim/fabric/rank_group.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <thread>
#include <typeinfo>

#include "embsim/core/errors.h"

namespace embsim::fabric {

namespace {

// Raised in ranks that were blocked when another rank failed. Never the
// error reported to the caller.
class GroupAborted : public Error {
 public:
  GroupAborted() : Error("rank group aborted after a failure on another rank") {}
};

bool is_group_aborted(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const GroupAborted&) {
    return true;
  } catch (...) {
    return false;
  }
}

}  // namespace

std::string_view to_string(Scheduler s) {
  switch (s) {
    case Scheduler::RoundRobin: return "round-robin";
    case Scheduler::Concurrent: return "concurrent";
  }
  return "unknown";
}

Scheduler parse_scheduler(std::string_view name) {
  if (name == "round-robin") return Scheduler::RoundRobin;
  if (name == "concurrent") return Scheduler::Concurrent;
  throw ConfigError("unknown scheduler '" + std::string(name) +
                    "' (expected round-robin or concurrent)");
}

void SimClock::advance_local(std::uint32_t rank, double us) {
  if (!(us >= 0.0)) throw ConfigError("clock cannot move backwards");
  now_.at(rank) += us;
}

void SimClock::advance_collective(std::span<const std::uint32_t> participants,
                                  double us) {
  if (!(us >= 0.0)) throw ConfigError("clock cannot move backwards");
  if (participants.empty()) return;
  double start = 0.0;
  for (auto r : participants) start = std::max(start, now_.at(r));
  for (auto r : participants) now_[r] = start + us;
}

std::string CollectiveOp::describe() const {
  return std::string(name_) + " at " +
         std::filesystem::path(where_.file_name()).filename().string() + ":" +
         std::to_string(where_.line()) + " (call #" + std::to_string(sequence_) +
         ")";
}

void CollectiveOp::mismatch(std::uint32_t rank, const std::string& detail) const {
  throw ProtocolError(describe() + ": rank " + std::to_string(rank) + " " + detail);
}

bool RankContext::CollectiveAwaiter::await_ready() {
  return group->arrive(rank, *op);
}

void RankContext::CollectiveAwaiter::await_suspend(std::coroutine_handle<> h) {
  group->park(rank, h);
}

std::uint32_t RankContext::size() const { return group_->size(); }
Backend RankContext::backend() const { return group_->backend(); }
const CostModel& RankContext::cost_model() const { return group_->cost_model(); }
double RankContext::clock() const { return group_->clock().now(rank_); }
void RankContext::advance_local(double us) { group_->clock().advance_local(rank_, us); }

RankGroup::RankGroup(const GroupConfig& config)
    : config_(config),
      model_(config.cost_model ? config.cost_model : &CostModel::default_model()),
      clock_(config.num_ranks) {
  if (config_.num_ranks == 0) throw ConfigError("rank group needs at least one rank");
  contexts_.reserve(config_.num_ranks);
  for (std::uint32_t r = 0; r < config_.num_ranks; ++r) {
    contexts_.push_back(RankContext(this, r));
  }
  all_ranks_.resize(config_.num_ranks);
  std::iota(all_ranks_.begin(), all_ranks_.end(), 0u);
  slots_.assign(config_.num_ranks, nullptr);
  parked_.assign(config_.num_ranks, {});
  calls_.assign(config_.num_ranks, 0);
}

bool RankGroup::arrive(std::uint32_t rank, CollectiveOp& op) {
  op.sequence_ = ++calls_[rank];
  if (config_.scheduler == Scheduler::RoundRobin) {
    slots_[rank] = &op;
    return false;
  }

  std::unique_lock lock(mu_);
  if (aborted_) throw GroupAborted();
  if (exited_ > 0) {
    auto err = std::make_exception_ptr(ProtocolError(
        op.describe() + ": rank " + std::to_string(rank) +
        " reached a collective after another rank returned"));
    abort_locked(err);
    std::rethrow_exception(err);
  }
  slots_[rank] = &op;
  if (++arrived_ == size()) {
    try {
      execute_collective();
    } catch (...) {
      abort_locked(std::current_exception());
      throw;
    }
    arrived_ = 0;
    ++generation_;
    cv_.notify_all();
    return true;
  }
  const auto gen = generation_;
  cv_.wait(lock, [&] { return generation_ != gen || aborted_; });
  if (generation_ == gen) throw GroupAborted();
  return true;
}

void RankGroup::park(std::uint32_t rank, std::coroutine_handle<> h) {
  parked_[rank] = h;
}

void RankGroup::execute_collective() {
  CollectiveOp* first = slots_[0];
  for (std::uint32_t r = 1; r < size(); ++r) {
    CollectiveOp* op = slots_[r];
    if (typeid(*op) != typeid(*first) || op->name() != first->name()) {
      throw ProtocolError("rank " + std::to_string(r) + " reached " +
                          op->describe() + " while rank 0 reached " +
                          first->describe());
    }
  }
  const double msg_bytes = first->execute(slots_);
  const double duration =
      first->kind() ? model_->eval_cost(config_.backend, *first->kind(), msg_bytes, size())
                    : 0.0;
  double start = 0.0;
  for (double c : clock_.values()) start = std::max(start, c);
  clock_.advance_collective(all_ranks_, duration);
  trace_.push_back({std::string(first->name()), first->kind(), msg_bytes, start, duration});
  std::fill(slots_.begin(), slots_.end(), nullptr);
}

void RankGroup::run(std::span<const RankProgram> programs) {
  if (programs.size() != size()) {
    throw ConfigError("rank group of " + std::to_string(size()) + " got " +
                      std::to_string(programs.size()) + " programs");
  }
  if (config_.scheduler == Scheduler::RoundRobin) {
    run_round_robin(programs);
  } else {
    run_concurrent(programs);
  }
}

void RankGroup::run_round_robin(std::span<const RankProgram> programs) {
  const std::uint32_t g = size();
  std::vector<std::coroutine_handle<>> next(g);
  std::vector<bool> finished(g, false);
  for (std::uint32_t r = 0; r < g; ++r) next[r] = programs[r].handle;

  for (;;) {
    for (std::uint32_t r = 0; r < g; ++r) {
      if (finished[r]) continue;
      std::exchange(next[r], {}).resume();
      if (programs[r].handle.done()) {
        finished[r] = true;
        if (programs[r].promise->error) std::rethrow_exception(programs[r].promise->error);
      } else if (!slots_[r] || !parked_[r]) {
        throw Error("rank " + std::to_string(r) +
                    " suspended outside a collective");
      }
    }
    const auto done = static_cast<std::uint32_t>(
        std::count(finished.begin(), finished.end(), true));
    if (done == g) return;
    if (done > 0) {
      const auto waiting = static_cast<std::uint32_t>(
          std::find(finished.begin(), finished.end(), false) - finished.begin());
      const auto returned = static_cast<std::uint32_t>(
          std::find(finished.begin(), finished.end(), true) - finished.begin());
      throw ProtocolError(slots_[waiting]->describe() + ": rank " +
                          std::to_string(waiting) + " waits but rank " +
                          std::to_string(returned) + " already returned");
    }
    execute_collective();
    for (std::uint32_t r = 0; r < g; ++r) next[r] = std::exchange(parked_[r], {});
  }
}

void RankGroup::run_concurrent(std::span<const RankProgram> programs) {
  std::vector<std::thread> workers;
  workers.reserve(size());
  for (std::uint32_t r = 0; r < size(); ++r) {
    workers.emplace_back([this, r, &programs] {
      // Collective awaiters block instead of suspending, so a single
      // resume runs the program to completion.
      programs[r].handle.resume();
      on_exit(r, programs[r].promise->error != nullptr);
    });
  }
  for (auto& w : workers) w.join();

  for (std::uint32_t r = 0; r < size(); ++r) {
    const auto& err = programs[r].promise->error;
    if (err && !is_group_aborted(err)) std::rethrow_exception(err);
  }
  if (abort_reason_) std::rethrow_exception(abort_reason_);
  for (std::uint32_t r = 0; r < size(); ++r) {
    if (!programs[r].handle.done()) {
      throw Error("rank " + std::to_string(r) + " did not run to completion");
    }
  }
}

void RankGroup::on_exit(std::uint32_t rank, bool failed) {
  std::lock_guard lock(mu_);
  if (failed) {
    abort_locked(nullptr);
    return;
  }
  ++exited_;
  if (arrived_ > 0) {
    abort_locked(std::make_exception_ptr(ProtocolError(
        "rank " + std::to_string(rank) + " returned while " +
        std::to_string(arrived_) + " rank(s) wait at a collective")));
  }
}

void RankGroup::abort_locked(std::exception_ptr reason) {
  if (!abort_reason_) abort_reason_ = reason;
  aborted_ = true;
  cv_.notify_all();
}

}  // namespace embsim::fabric
