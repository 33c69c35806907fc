// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "adact/cost_model.hpp"
#include "adact/graph.hpp"
#include "adact/sensitivity.hpp"

namespace adact::test {

inline std::filesystem::path fixture_dir() { return ADACT_FIXTURE_DIR; }
inline std::filesystem::path descriptor_dir() { return ADACT_DESCRIPTOR_DIR; }

inline Model fixture_model() { return load_model(fixture_dir() / "model.json"); }
inline Dataset fixture_set(const char* name) { return load_dataset(fixture_dir() / name); }
inline SensitivityTable fixture_table() { return load_table(fixture_dir() / "golden" / "sensitivity.json"); }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("adact_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline LayerSpec layer(std::string id, LayerKind kind, Geometry g = {}) {
  LayerSpec l;
  l.id = std::move(id);
  l.kind = kind;
  l.geometry = g;
  return l;
}

inline Geometry dense_geo(std::size_t out, bool bias = true) {
  Geometry g;
  g.out_features = out;
  g.bias = bias;
  return g;
}

inline Geometry conv_geo(std::size_t out, std::size_t k, std::size_t stride = 1, std::size_t pad = 0) {
  Geometry g;
  g.out_channels = out;
  g.kernel = k;
  g.stride = stride;
  g.padding = pad;
  return g;
}

inline Geometry pool_geo(std::size_t k, std::size_t stride, std::size_t pad = 0) {
  Geometry g;
  g.kernel = k;
  g.stride = stride;
  g.padding = pad;
  return g;
}

inline std::vector<float> random_values(std::mt19937_64& rng, std::size_t n, float lo, float hi) {
  std::uniform_real_distribution<float> d(lo, hi);
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace adact::test

namespace adact::test {

/// Model with `n_act` dense -> aa_relu stages of width `width` followed by a
/// dense head, in descriptor mode.
inline Model chain_model(std::size_t n_act, std::size_t width, std::size_t classes = 4) {
  std::vector<LayerSpec> layers;
  for (std::size_t i = 0; i < n_act; ++i) {
    layers.push_back(layer("fc" + std::to_string(i), LayerKind::Dense, dense_geo(width)));
    layers.push_back(layer("act" + std::to_string(i), LayerKind::AaRelu));
  }
  layers.push_back(layer("head", LayerKind::Dense, dense_geo(classes)));
  return Model::build("chain", {width}, classes, std::move(layers));
}

/// Table over `m` whose memory columns come from the cost model and whose
/// accuracies are random around `baseline_accuracy`.
inline SensitivityTable synthetic_table(const Model& m, const std::vector<double>& levels,
                                        const std::vector<Precision>& precisions, std::mt19937_64& rng,
                                        double baseline_accuracy = 0.9) {
  SensitivityTable t;
  t.model_name = m.name();
  t.baseline_accuracy = baseline_accuracy;
  t.baseline_memory_bytes = memory_cost(m).total_bytes;
  t.layer_ids = m.activation_ids();
  t.sparsity_levels = levels;
  t.precisions = precisions;
  std::uniform_real_distribution<double> drop(-0.02, 0.3);
  for (const auto& id : t.layer_ids) {
    for (double s : levels) {
      for (Precision q : precisions) {
        RuntimeConfig c = m.baseline_config();
        c[id] = {static_cast<float>(s), q, s};
        SensitivityRecord r;
        r.layer_id = id;
        r.sparsity = s;
        r.precision = q;
        r.threshold = static_cast<float>(s);
        const bool anchor = s == 0.0 && q == Precision::FP32;
        r.accuracy = anchor ? baseline_accuracy : baseline_accuracy - drop(rng);
        r.memory_bytes = memory_cost(m, c).total_bytes;
        r.memory_saved_bytes = static_cast<std::int64_t>(t.baseline_memory_bytes) - static_cast<std::int64_t>(r.memory_bytes);
        t.records.push_back(r);
      }
    }
  }
  return t;
}

}  // namespace adact::test
