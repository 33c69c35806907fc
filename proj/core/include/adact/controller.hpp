// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "adact/graph.hpp"
#include "adact/planner.hpp"
#include "adact/sensitivity.hpp"

namespace adact {

struct BudgetEvent {
  std::uint64_t timestamp_ms = 0;
  std::uint64_t memory_budget_bytes = 0;
  std::optional<double> latency_budget_proxy;

  Budget budget() const { return Budget{memory_budget_bytes, latency_budget_proxy}; }
};

/// Budget events with strictly increasing timestamps.
class BudgetSignal {
 public:
  BudgetSignal() = default;
  /// Throws InvalidInputError when timestamps are not strictly increasing or
  /// a budget is invalid.
  explicit BudgetSignal(std::vector<BudgetEvent> events);

  const std::vector<BudgetEvent>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }

 private:
  std::vector<BudgetEvent> events_;
};

/// Reads `timestamp_ms,memory_budget_bytes[,latency_budget_proxy]` lines.
/// Blank lines, lines starting with '#' and a leading header row are skipped.
BudgetSignal parse_budget_trace(std::istream& in);
BudgetSignal load_budget_trace(const std::filesystem::path& path);

struct ControllerRecord {
  std::size_t event_index = 0;
  BudgetEvent event;
  bool feasible = true;
  /// The installed plan; the minimum-memory plan when infeasible.
  Plan plan;
  /// Bytes by which the installed plan exceeds the memory budget.
  std::uint64_t memory_shortfall_bytes = 0;
  /// Amount by which the installed plan exceeds the latency budget.
  double latency_shortfall = 0.0;
  double replan_us = 0.0;
  std::size_t inferences_served = 0;
  std::size_t correct = 0;
};

struct ControllerLog {
  std::vector<ControllerRecord> records;
};

/// One JSON object per line, one line per record.
void write_log_jsonl(std::ostream& out, const ControllerLog& log);

/// Holds the active runtime configuration of a model as an immutable
/// snapshot. One writer swaps whole configurations; readers pin a snapshot
/// for the length of one inference.
class AdaptiveController {
 public:
  explicit AdaptiveController(const Model& m);

  /// Replaces the whole configuration with the plan's layers over baseline.
  /// Throws InvalidInputError on an unknown layer id, leaving the active
  /// configuration unchanged.
  void swap_config(const Plan& p);
  void swap_config(const RuntimeConfig& partial);

  std::shared_ptr<const RuntimeConfig> snapshot() const;
  /// Runs one inference under a single pinned snapshot.
  Tensor infer(const Tensor& input) const;

  const Model& model() const noexcept { return *model_; }

 private:
  const Model* model_;
  mutable std::mutex mu_;
  std::shared_ptr<const RuntimeConfig> active_;
};

/// Throws InvalidInputError unless `t` was computed for `m` (model name,
/// activation layer ids and baseline memory all match).
void check_table_matches(const Model& m, const SensitivityTable& t);

/// Replays `signal` against a workload. Inference i happens at simulated time
/// t0 + i * period_ms, where t0 is the first event's timestamp; event k serves
/// the inferences before event k + 1 and the last event serves the rest.
/// Every event re-plans with greedy_select from the cached table; an
/// infeasible budget installs the minimum-memory plan and logs the
/// shortfall. No dataset pass and no calibration happen here.
ControllerLog run_adaptive(const Model& m, const SensitivityTable& table, const BudgetSignal& signal,
                           const Dataset& workload, double period_ms = 1.0);

}  // namespace adact
