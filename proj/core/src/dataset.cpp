// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cmath>

#include "adact/error.hpp"
#include "adact/graph.hpp"
#include "adact/tensor_io.hpp"

namespace adact {

namespace {
std::atomic<std::uint64_t> g_dataset_passes{0};
}  // namespace

std::uint64_t dataset_pass_count() noexcept { return g_dataset_passes.load(); }
void note_dataset_pass() noexcept { g_dataset_passes.fetch_add(1); }

Shape Dataset::sample_shape() const {
  if (images.rank() < 2) throw InvalidInputError("dataset images must have rank >= 2");
  return Shape(images.shape().begin() + 1, images.shape().end());
}

void Dataset::validate() const {
  if (images.empty()) {
    if (!labels.empty()) throw InvalidInputError("dataset has labels but no images");
    return;
  }
  if (images.shape().front() != labels.size()) {
    throw InvalidInputError("dataset has " + std::to_string(images.shape().front()) + " images but " +
                            std::to_string(labels.size()) + " labels");
  }
}

Tensor Dataset::sample(std::size_t i) const {
  if (i >= size()) throw InvalidInputError("dataset index out of range");
  Shape shape = sample_shape();
  const std::size_t n = element_count(shape);
  const auto all = images.data();
  return Tensor(std::move(shape), std::vector<float>(all.begin() + static_cast<std::ptrdiff_t>(i * n),
                                                     all.begin() + static_cast<std::ptrdiff_t>((i + 1) * n)));
}

Dataset Dataset::head(std::size_t n) const {
  if (n == 0 || n >= size()) return *this;
  Shape shape = images.shape();
  shape[0] = n;
  const std::size_t per = element_count(sample_shape());
  const auto all = images.data();
  Dataset out;
  out.images = Tensor(std::move(shape), std::vector<float>(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n * per)));
  out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  ds.images = read_aat(dir / "images.aat");
  const Tensor labels = read_aat(dir / "labels.aat");
  if (labels.rank() != 1) throw InvalidInputError("labels.aat must be rank 1");
  for (float v : labels.data()) {
    if (!std::isfinite(v) || v != std::floor(v) || v < 0.0f) {
      throw InvalidInputError("labels.aat must hold non-negative integers");
    }
    ds.labels.push_back(static_cast<int>(v));
  }
  ds.validate();
  return ds;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  ds.validate();
  std::filesystem::create_directories(dir);
  write_aat(dir / "images.aat", ds.images);
  const std::size_t n = ds.labels.size();
  write_aat(dir / "labels.aat", Tensor({n}, std::vector<float>(ds.labels.begin(), ds.labels.end())));
}

std::size_t argmax(std::span<const float> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

double evaluate_accuracy(const Model& m, const RuntimeConfig& config, const Dataset& ds) {
  ds.validate();
  if (ds.size() == 0) throw InvalidInputError("evaluate_accuracy: dataset is empty");
  for (int label : ds.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= m.class_count()) {
      throw InvalidInputError("evaluate_accuracy: label " + std::to_string(label) + " outside [0, " +
                              std::to_string(m.class_count()) + ")");
    }
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Tensor scores = forward(m, config, ds.sample(i));
    if (argmax(scores.data()) == static_cast<std::size_t>(ds.labels[i])) ++correct;
  }
  note_dataset_pass();
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

double evaluate_accuracy(const Model& m, const Dataset& ds) {
  return evaluate_accuracy(m, m.runtime_config(), ds);
}

}  // namespace adact
