// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "adact/activation.hpp"
#include "adact/graph.hpp"

namespace adact {

/// Whole-model accuracy and memory with one activation layer set to
/// (sparsity, precision) and every other layer at baseline.
struct SensitivityRecord {
  std::string layer_id;
  double sparsity = 0.0;
  Precision precision = Precision::FP32;
  float threshold = 0.0f;
  double accuracy = 0.0;
  std::uint64_t memory_bytes = 0;
  std::int64_t memory_saved_bytes = 0;

  friend bool operator==(const SensitivityRecord&, const SensitivityRecord&) = default;
};

struct SensitivityTable {
  std::string model_name;
  double baseline_accuracy = 0.0;
  std::uint64_t baseline_memory_bytes = 0;
  std::vector<std::string> layer_ids;
  std::vector<double> sparsity_levels;
  std::vector<Precision> precisions;
  /// Ordered by layer, then sparsity level, then precision.
  std::vector<SensitivityRecord> records;

  const SensitivityRecord& at(const std::string& layer_id, double s, Precision q) const;
  /// Throws InvalidInputError on wrong cardinality, duplicates or a missing
  /// baseline anchor.
  void validate() const;

  friend bool operator==(const SensitivityTable&, const SensitivityTable&) = default;
};

inline const std::vector<double> kDefaultSparsityLevels = {0.0, 0.25, 0.5, 0.75, 1.0};
inline const std::vector<Precision> kDefaultPrecisions = {Precision::FP32, Precision::FP16, Precision::FP8,
                                                          Precision::INT4, Precision::INT2};

struct SensitivityOptions {
  std::vector<double> sparsity_levels = kDefaultSparsityLevels;
  std::vector<Precision> precisions = kDefaultPrecisions;
  /// Evaluate on the first N samples; 0 uses the whole set.
  std::size_t eval_subset = 0;
  /// Worker threads for the per-layer sweeps; 0 picks hardware concurrency.
  unsigned threads = 0;
};

/// Sweeps the sparsity x precision grid for each activation layer in turn
/// with all other layers frozen at baseline. Thresholds come from
/// `profiles` via threshold_for_sparsity. Requires 0 in the sparsity levels
/// and FP32 in the precisions. Errors raised while evaluating a grid point
/// are rethrown naming (layer, s, q).
SensitivityTable analyze(const Model& m, const Dataset& eval,
                         const std::map<std::string, CalibrationProfile>& profiles,
                         const SensitivityOptions& opts = {});

/// CSV columns: layer_id,s,q_bits,q_kind,accuracy,memory_bytes,memory_saved_bytes,threshold
void write_table_csv(std::ostream& out, const SensitivityTable& t);
std::string table_to_json(const SensitivityTable& t);
SensitivityTable table_from_json(std::string_view text);
SensitivityTable load_table(const std::filesystem::path& path);

/// Comma-separated lists as accepted on the command line.
std::vector<double> parse_sparsity_levels(std::string_view text);
std::vector<Precision> parse_precisions(std::string_view text);

}  // namespace adact
