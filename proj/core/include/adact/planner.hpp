// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adact/cost_model.hpp"
#include "adact/error.hpp"
#include "adact/graph.hpp"
#include "adact/sensitivity.hpp"

namespace adact {

inline constexpr double kDropEpsilon = 1e-4;

/// One (layer, sparsity, precision) option from the sensitivity table.
struct Candidate {
  std::string layer_id;
  std::size_t layer_order = 0;
  double sparsity = 0.0;
  Precision precision = Precision::FP32;
  float threshold = 0.0f;
  /// Baseline accuracy minus the record's accuracy; negative when the option
  /// improved accuracy.
  double accuracy_drop = 0.0;
  std::int64_t memory_saved_bytes = 0;
  /// memory_saved_bytes / max(accuracy_drop, kDropEpsilon)
  double score = 0.0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct Budget {
  std::uint64_t memory_bytes = 0;
  std::optional<double> latency_proxy;

  /// Throws InvalidInputError unless memory_bytes > 0 and any latency budget
  /// is finite and non-negative.
  void validate() const;
  bool met_by(const CostReport& r) const noexcept;
};

struct Assignment {
  std::string layer_id;
  double sparsity = 0.0;
  float threshold = 0.0f;
  Precision precision = Precision::FP32;
  double accuracy_drop = 0.0;
  std::int64_t memory_saved_bytes = 0;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Selected per-layer settings. Layers without an assignment stay at
/// baseline.
struct Plan {
  Budget budget;
  std::uint64_t baseline_memory_bytes = 0;
  double baseline_latency_proxy = 0.0;
  double baseline_accuracy = std::numeric_limits<double>::quiet_NaN();
  /// At most one per layer, in layer order.
  std::vector<Assignment> assignments;
  std::uint64_t projected_memory_bytes = 0;
  double projected_latency_proxy = 0.0;
  /// Sum of per-layer accuracy drops: an additive estimate, not a measurement.
  double projected_accuracy_drop_sum = 0.0;
  /// Accepted candidates in the order they were chosen.
  std::vector<Candidate> provenance;
  /// Accuracy of the fully configured model, when measured.
  std::optional<double> joint_accuracy;

  bool empty() const noexcept { return assignments.empty(); }
  /// Partial configuration holding only the assigned layers.
  RuntimeConfig runtime_config() const;
};

/// Raised when no selection from the candidate universe meets the budget.
class InfeasibleBudgetError : public Error {
 public:
  InfeasibleBudgetError(const std::string& what, std::uint64_t floor_memory_bytes)
      : Error(what), floor_memory_bytes_(floor_memory_bytes) {}
  /// Lowest memory reachable with the candidates.
  std::uint64_t floor_memory_bytes() const noexcept { return floor_memory_bytes_; }

 private:
  std::uint64_t floor_memory_bytes_;
};

/// Candidates for every non-baseline record that saves memory, best first:
/// score descending, then smaller accuracy drop, earlier layer, larger
/// sparsity, fewer bits. Throws InvalidInputError on an invalid table.
std::vector<Candidate> build_ranklist(const SensitivityTable& t);

/// Walks the rank-list from the top. A candidate is accepted when its layer
/// has no assignment yet, or replaces the layer's assignment when it saves
/// strictly more memory. After each acceptance the configured model is
/// re-costed; selection stops once the budget is met. A budget the baseline
/// already meets yields an empty plan. Throws InfeasibleBudgetError carrying
/// the memory floor when the list runs out.
Plan greedy_select(const std::vector<Candidate>& ranklist, const Model& m, const Budget& budget,
                   double baseline_accuracy = std::numeric_limits<double>::quiet_NaN());

/// Every layer at its largest-saving candidate (first in rank order on ties).
/// The plan's budget is set to its own projected memory.
Plan minimum_memory_plan(const std::vector<Candidate>& ranklist, const Model& m,
                         double baseline_accuracy = std::numeric_limits<double>::quiet_NaN());

/// Exact minimizer of the summed accuracy drop over every per-layer choice
/// of {baseline} plus that layer's rank-list candidates, subject to the
/// budget. Ties go to lower memory, then to the lexicographically smaller
/// choice vector (baseline first, then records in table order). Throws
/// InvalidInputError when the search space exceeds `max_assignments` and
/// InfeasibleBudgetError when nothing fits.
Plan brute_force_select(const SensitivityTable& t, const Model& m, const Budget& budget,
                        std::size_t max_assignments = 1'000'000);

/// Measures the accuracy of `m` configured with `plan` and stores it in the plan.
double joint_evaluate(const Model& m, Plan& plan, const Dataset& ds);

std::string plan_to_json(const Plan& p);
Plan plan_from_json(std::string_view text);

/// Parses a byte count such as "123456", "5.5e6", "64MB", "48KiB".
std::uint64_t parse_byte_count(std::string_view text);

}  // namespace adact
