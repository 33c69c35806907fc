// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "adact/graph.hpp"

namespace adact {

/// Memory and latency of a configured model at batch 1.
struct CostReport {
  std::uint64_t param_bytes = 0;
  std::uint64_t activation_bytes = 0;
  std::uint64_t total_bytes = 0;
  /// Unitless: sum over layers of MACs x (bits / 32) x (1 - sparsity) of the
  /// activation feeding the layer.
  double latency_proxy = 0.0;

  friend bool operator==(const CostReport&, const CostReport&) = default;
};

struct LayerCost {
  std::string layer_id;
  LayerKind kind = LayerKind::AaRelu;
  std::uint64_t param_count = 0;
  std::uint64_t param_bytes = 0;
  /// Elements this layer stores; 0 for layers that write into another
  /// layer's buffer (in-place activations, flatten views).
  std::uint64_t activation_elements = 0;
  int activation_bits = 32;
  std::uint64_t activation_bytes = 0;
  std::uint64_t macs = 0;
  double latency = 0.0;
};

/// Memory accounting rules:
///  - parameters are FP32 (4 bytes each);
///  - each layer output is stored once at the precision of the cast that
///    consumes it, ceil(elements * bits / 8) bytes;
///  - an aa_relu whose producer feeds nothing else runs in place: the
///    producer's buffer takes the activation's precision and the aa_relu
///    adds no storage of its own;
///  - flatten is a view and adds no storage;
///  - zero-valued elements are not discounted.
///
/// The layer analysis is done once at construction so evaluating many
/// configurations is cheap.
class CostModel {
 public:
  explicit CostModel(const Model& m);

  std::vector<LayerCost> layer_costs(const RuntimeConfig& config) const;
  CostReport evaluate(const RuntimeConfig& config) const;
  std::uint64_t memory_bytes(const RuntimeConfig& config) const;
  double latency(const RuntimeConfig& config) const;

  const Model& model() const noexcept { return *model_; }

 private:
  struct Node {
    std::uint64_t params = 0;
    std::uint64_t elements = 0;
    std::uint64_t macs = 0;
    bool stores = true;   // false for in-place aa_relu and flatten
    int buffer = 0;       // layer whose buffer holds this output
    int feeder = -1;      // layer whose activation config scales this layer's latency
  };

  // Bits per buffer owner and (bits, sparsity) per feeder for a config.
  void resolve(const RuntimeConfig& config, std::vector<int>& buffer_bits,
               std::vector<const LayerRuntimeConfig*>& act) const;

  const Model* model_;
  std::vector<Node> nodes_;
};

CostReport memory_cost(const Model& m, const RuntimeConfig& config);
CostReport memory_cost(const Model& m);
double latency_proxy(const Model& m, const RuntimeConfig& config);
double latency_proxy(const Model& m);

std::string cost_report_json(const CostReport& r, const std::vector<LayerCost>& layers);
/// Per-layer CSV with a trailing TOTAL row.
void write_cost_csv(std::ostream& out, const CostReport& r, const std::vector<LayerCost>& layers);

}  // namespace adact
