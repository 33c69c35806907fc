// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "adact/graph.hpp"
#include "adact/tensor.hpp"

namespace adact {

/// Threshold-shifted ReLU: x - T when x > T, otherwise 0. With T = 0 this is
/// the standard ReLU.
constexpr float aa_relu(float x, float threshold) noexcept {
  return x > threshold ? x - threshold : 0.0f;
}

/// Element-wise aa_relu; the result has FP32 storage. Throws
/// InvalidInputError for a negative or non-finite threshold.
Tensor aa_relu(const Tensor& x, float threshold);

/// Sorted sample of the values entering one aa_relu layer under the baseline
/// configuration.
struct CalibrationProfile {
  std::string layer_id;
  std::vector<float> samples;  // ascending
  std::uint64_t observed_count = 0;  // values seen before subsampling
  /// Fraction of samples <= 0, i.e. zeroed by the plain ReLU.
  double baseline_zero_fraction = 0.0;

  std::size_t sample_count() const noexcept { return samples.size(); }
  /// `points` values at cumulative fractions i / (points - 1), nearest-rank
  /// with index floor(i * (n - 1) / (points - 1)).
  std::vector<float> quantiles(std::size_t points = 1001) const;
};

struct CalibrationOptions {
  std::size_t min_samples = 1000;
  std::size_t max_samples = 1'000'000;
  std::uint64_t seed = 0;
};

/// Profiles every aa_relu layer in one pass over `ds` with the model at its
/// baseline configuration. Layers that see more than max_samples values are
/// reservoir-subsampled deterministically from `seed`. Throws
/// InvalidInputError on an empty dataset.
std::map<std::string, CalibrationProfile> calibrate_all(const Model& m, const Dataset& ds,
                                                        const CalibrationOptions& opts = {});

/// Single-layer variant; throws InvalidInputError if `layer_id` is missing or
/// is not an aa_relu layer.
CalibrationProfile calibrate(const Model& m, const Dataset& ds, const std::string& layer_id,
                             const CalibrationOptions& opts = {});

/// True when the profile holds fewer than `min_samples` values.
bool is_degenerate(const CalibrationProfile& p, std::size_t min_samples = 1000);

/// Smallest T >= 0 such that the fraction of samples <= T reaches
/// z + s * (1 - z), where z is the baseline zero fraction. s = 0 gives T = 0
/// and s = 1 gives the largest sample (or 0 when no sample is positive).
/// Throws InvalidInputError when s is outside [0, 1] or the profile is empty.
float threshold_for_sparsity(const CalibrationProfile& p, double s);

/// Additional sparsity of `after` relative to `baseline_zero_fraction`:
/// (zeros(after) - z) / (1 - z), or 0 when z is 1.
double additional_sparsity(double zero_fraction, double baseline_zero_fraction) noexcept;

/// JSON array of {layer_id, quantiles[1001], baseline_zero_fraction, sample_count}.
std::string profiles_to_json(const std::map<std::string, CalibrationProfile>& profiles);

/// CSV rows `bin_lo,bin_hi,count`; the first row is the zero bin [0, 0].
void write_histogram_csv(std::ostream& out, const std::vector<HistogramBin>& bins);

}  // namespace adact
