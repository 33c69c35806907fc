// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adact/tensor.hpp"

namespace adact {

enum class LayerKind : std::uint8_t {
  Conv2d,
  DepthwiseConv2d,
  Dense,
  MaxPool,
  AvgPool,
  Flatten,
  Softmax,
  AaRelu,
};

std::string_view to_string(LayerKind k) noexcept;
LayerKind parse_layer_kind(std::string_view name);
bool has_weights(LayerKind k) noexcept;

/// Kernel/stride/padding/channel parameters. Fields not used by a kind are
/// ignored. Kernels are square.
struct Geometry {
  std::size_t out_channels = 0;  // conv2d
  std::size_t out_features = 0;  // dense
  std::size_t kernel = 0;        // conv2d, depthwise_conv2d, pools
  std::size_t stride = 1;
  std::size_t padding = 0;
  bool bias = true;
  /// Residual merge: the output of this layer id is added element-wise to
  /// this layer's output. Valid on conv2d, depthwise_conv2d and dense.
  std::optional<std::string> add;
};

/// Element range [offset, offset + length) of the FP32 weight blob.
struct WeightRef {
  std::size_t offset = 0;
  std::size_t length = 0;
};

struct LayerSpec {
  std::string id;
  LayerKind kind = LayerKind::AaRelu;
  Geometry geometry;
  /// Producer of this layer's input; empty means the previous layer (or the
  /// model input for the first layer).
  std::optional<std::string> input;
  std::optional<WeightRef> weight_ref;

  // Resolved when the model is built.
  Shape input_shape;
  Shape output_shape;
  int input_index = -1;  // -1 is the model input
  int add_index = -1;    // -1 when there is no residual merge
  std::size_t param_count = 0;
};

/// Per-activation knobs: the AA-ReLU cutoff and the storage format its output
/// is cast to. `sparsity` is the nominal extra sparsity the threshold was
/// calibrated for. It feeds the latency proxy, and a value of 1 zeroes the
/// whole output regardless of the threshold.
struct LayerRuntimeConfig {
  float threshold = 0.0f;
  Precision precision = Precision::FP32;
  double sparsity = 0.0;

  friend bool operator==(const LayerRuntimeConfig&, const LayerRuntimeConfig&) = default;
};

using RuntimeConfig = std::map<std::string, LayerRuntimeConfig>;

/// Feed-forward network: ordered layers, an optional FP32 weight blob and the
/// current runtime configuration of its aa_relu layers. Architecture and
/// weights are immutable; copies share the weight blob.
class Model {
 public:
  /// Validates ids, kinds, geometry and weight refs and resolves shapes.
  /// Without `weights` the model is a descriptor: usable by the cost model
  /// but not for inference. Weighted layers lacking a weight_ref are packed
  /// consecutively after the previous weighted layer.
  static Model build(std::string name, Shape input_shape, std::size_t class_count,
                     std::vector<LayerSpec> layers,
                     std::optional<std::vector<float>> weights = std::nullopt);

  const std::string& name() const noexcept { return name_; }
  const Shape& input_shape() const noexcept { return input_shape_; }
  std::size_t class_count() const noexcept { return class_count_; }
  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  const LayerSpec& layer(std::size_t i) const { return layers_.at(i); }
  std::optional<std::size_t> find_layer(std::string_view id) const;
  const Shape& output_shape() const noexcept { return layers_.back().output_shape; }

  bool has_weights() const noexcept { return weights_ != nullptr; }
  /// Empty in descriptor mode.
  std::span<const float> weights() const noexcept;
  std::span<const float> layer_weights(std::size_t i) const;

  /// Ids of the aa_relu layers in layer order.
  const std::vector<std::string>& activation_ids() const noexcept { return activation_ids_; }
  bool is_activation(std::string_view id) const;

  const RuntimeConfig& runtime_config() const noexcept { return config_; }
  /// Replaces the whole configuration. Keys must be aa_relu ids; missing
  /// activations get the default (T=0, FP32). Throws InvalidInputError.
  void set_runtime_config(const RuntimeConfig& config);
  /// Complete configuration with every activation at (T=0, FP32).
  RuntimeConfig baseline_config() const;
  /// Fills missing activations with defaults and rejects unknown keys.
  RuntimeConfig complete_config(const RuntimeConfig& partial) const;

 private:
  std::string name_;
  Shape input_shape_;
  std::size_t class_count_ = 0;
  std::vector<LayerSpec> layers_;
  std::shared_ptr<const std::vector<float>> weights_;
  std::vector<std::string> activation_ids_;
  RuntimeConfig config_;
};

/// Parses a manifest JSON document. `base_dir` resolves a relative
/// weights_file; a manifest without weights_file loads in descriptor mode.
Model parse_model_manifest(std::string_view json_text, const std::filesystem::path& base_dir);
Model load_model(const std::filesystem::path& manifest_path);
/// Serializes the architecture (no runtime config) to manifest JSON.
std::string model_manifest_json(const Model& m, std::string_view weights_file = {});

/// Called after each layer; returning a tensor replaces that layer's output.
using LayerHook = std::function<std::optional<Tensor>(std::size_t layer_index, const Tensor& output)>;

/// Runs the network with the given configuration. Every aa_relu layer applies
/// its threshold then casts to its precision. Throws InvalidInputError on a
/// shape mismatch or missing weights, NumericError naming the layer when a
/// non-finite value appears.
Tensor forward(const Model& m, const RuntimeConfig& config, const Tensor& input);
Tensor forward(const Model& m, const Tensor& input);
/// Like forward, but returns every layer's output in layer order.
std::vector<Tensor> forward_trace(const Model& m, const RuntimeConfig& config, const Tensor& input,
                                  const LayerHook& hook = {});

/// Images [N, ...input_shape] with one integer label per image.
struct Dataset {
  Tensor images;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  Shape sample_shape() const;
  Tensor sample(std::size_t i) const;
  /// First `n` samples (all when n is 0 or exceeds the size).
  Dataset head(std::size_t n) const;
  /// Throws InvalidInputError when image count and label count disagree.
  void validate() const;
};

/// Reads `images.aat` and `labels.aat` from a directory.
Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const std::filesystem::path& dir, const Dataset& ds);

std::size_t argmax(std::span<const float> scores);

/// Top-1 accuracy. Throws InvalidInputError on an empty dataset or a label
/// outside [0, class_count).
double evaluate_accuracy(const Model& m, const RuntimeConfig& config, const Dataset& ds);
double evaluate_accuracy(const Model& m, const Dataset& ds);

/// Number of full dataset passes (accuracy evaluations and calibrations)
/// performed by this process.
std::uint64_t dataset_pass_count() noexcept;
void note_dataset_pass() noexcept;

}  // namespace adact
