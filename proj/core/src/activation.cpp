// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#include "adact/activation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include <nlohmann/json.hpp>

#include "adact/error.hpp"

namespace adact {

namespace {

// Algorithm R reservoir.
class Reservoir {
 public:
  Reservoir(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {}

  void add(float v) {
    ++seen_;
    if (samples_.size() < capacity_) {
      samples_.push_back(v);
      return;
    }
    std::uniform_int_distribution<std::uint64_t> pick(0, seen_ - 1);
    const std::uint64_t j = pick(rng_);
    if (j < capacity_) samples_[j] = v;
  }

  std::uint64_t seen() const noexcept { return seen_; }
  std::vector<float> take() && { return std::move(samples_); }

 private:
  std::size_t capacity_;
  std::mt19937_64 rng_;
  std::uint64_t seen_ = 0;
  std::vector<float> samples_;
};

CalibrationProfile finish_profile(std::string id, Reservoir&& r) {
  CalibrationProfile p;
  p.layer_id = std::move(id);
  p.observed_count = r.seen();
  p.samples = std::move(r).take();
  std::sort(p.samples.begin(), p.samples.end());
  const auto nonpositive =
      std::upper_bound(p.samples.begin(), p.samples.end(), 0.0f) - p.samples.begin();
  p.baseline_zero_fraction =
      p.samples.empty() ? 0.0 : static_cast<double>(nonpositive) / static_cast<double>(p.samples.size());
  return p;
}

}  // namespace

Tensor aa_relu(const Tensor& x, float threshold) {
  if (!(threshold >= 0.0f) || !std::isfinite(threshold)) {
    throw InvalidInputError("aa_relu: threshold must be finite and >= 0");
  }
  std::vector<float> out(x.size());
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = aa_relu(in[i], threshold);
  return Tensor(x.shape(), std::move(out));
}

std::vector<float> CalibrationProfile::quantiles(std::size_t points) const {
  if (samples.empty() || points < 2) return {};
  std::vector<float> q(points);
  const std::size_t n = samples.size();
  for (std::size_t i = 0; i < points; ++i) q[i] = samples[i * (n - 1) / (points - 1)];
  return q;
}

std::map<std::string, CalibrationProfile> calibrate_all(const Model& m, const Dataset& ds,
                                                        const CalibrationOptions& opts) {
  ds.validate();
  if (ds.size() == 0) throw InvalidInputError("calibrate: calibration dataset is empty");
  if (opts.max_samples == 0) throw InvalidInputError("calibrate: max_samples must be positive");

  const auto& layers = m.layers();
  std::vector<std::pair<std::size_t, std::size_t>> watched;  // (activation layer, producer)
  std::vector<Reservoir> reservoirs;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].kind != LayerKind::AaRelu) continue;
    watched.emplace_back(i, static_cast<std::size_t>(layers[i].input_index));
    reservoirs.emplace_back(opts.max_samples, opts.seed + 0x9e3779b97f4a7c15ULL * (watched.size()));
  }

  const RuntimeConfig baseline = m.baseline_config();
  for (std::size_t n = 0; n < ds.size(); ++n) {
    const Tensor x = ds.sample(n);
    const auto outputs = forward_trace(m, baseline, x);
    for (std::size_t w = 0; w < watched.size(); ++w) {
      const auto [act, producer] = watched[w];
      const Tensor& pre = layers[act].input_index < 0 ? x : outputs[producer];
      for (float v : pre.data()) reservoirs[w].add(v);
    }
  }
  note_dataset_pass();

  std::map<std::string, CalibrationProfile> profiles;
  for (std::size_t w = 0; w < watched.size(); ++w) {
    const std::string& id = layers[watched[w].first].id;
    profiles.emplace(id, finish_profile(id, std::move(reservoirs[w])));
  }
  return profiles;
}

CalibrationProfile calibrate(const Model& m, const Dataset& ds, const std::string& layer_id,
                             const CalibrationOptions& opts) {
  const auto idx = m.find_layer(layer_id);
  if (!idx) throw InvalidInputError("calibrate: no layer '" + layer_id + "'");
  if (m.layer(*idx).kind != LayerKind::AaRelu) {
    throw InvalidInputError("calibrate: layer '" + layer_id + "' is not an aa_relu activation");
  }
  auto all = calibrate_all(m, ds, opts);
  return std::move(all.at(layer_id));
}

bool is_degenerate(const CalibrationProfile& p, std::size_t min_samples) {
  return p.sample_count() < min_samples;
}

float threshold_for_sparsity(const CalibrationProfile& p, double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw InvalidInputError("threshold_for_sparsity: s must be in [0, 1]");
  const std::size_t n = p.samples.size();
  if (n == 0) throw InvalidInputError("threshold_for_sparsity: empty profile for '" + p.layer_id + "'");

  const auto zeros = static_cast<std::size_t>(
      std::upper_bound(p.samples.begin(), p.samples.end(), 0.0f) - p.samples.begin());
  const double extra = s * static_cast<double>(n - zeros);
  // Tolerate representation error in s * count before taking the ceiling.
  auto needed = zeros + static_cast<std::size_t>(std::ceil(extra - 1e-9));
  needed = std::min(needed, n);
  if (needed == 0) return 0.0f;
  return std::max(0.0f, p.samples[needed - 1]);
}

double additional_sparsity(double zero_fraction, double baseline_zero_fraction) noexcept {
  if (baseline_zero_fraction >= 1.0) return 0.0;
  return (zero_fraction - baseline_zero_fraction) / (1.0 - baseline_zero_fraction);
}

std::string profiles_to_json(const std::map<std::string, CalibrationProfile>& profiles) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [id, p] : profiles) {
    arr.push_back({{"layer_id", id},
                   {"quantiles", p.quantiles(1001)},
                   {"baseline_zero_fraction", p.baseline_zero_fraction},
                   {"sample_count", p.sample_count()},
                   {"observed_count", p.observed_count}});
  }
  return arr.dump(2);
}

void write_histogram_csv(std::ostream& out, const std::vector<HistogramBin>& bins) {
  out << "bin_lo,bin_hi,count\n";
  out.precision(9);
  for (const auto& b : bins) out << b.lo << ',' << b.hi << ',' << b.count << '\n';
}

}  // namespace adact
