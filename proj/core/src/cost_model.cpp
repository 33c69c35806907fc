// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#include "adact/cost_model.hpp"

#include <ostream>

#include <nlohmann/json.hpp>

namespace adact {

namespace {

std::uint64_t layer_macs(const LayerSpec& l) {
  const std::uint64_t out = element_count(l.output_shape);
  const std::uint64_t k2 = l.geometry.kernel * l.geometry.kernel;
  switch (l.kind) {
    case LayerKind::Conv2d: return out * l.input_shape[0] * k2;
    case LayerKind::DepthwiseConv2d: return out * k2;
    case LayerKind::Dense: return out * element_count(l.input_shape);
    default: return 0;
  }
}

}  // namespace

CostModel::CostModel(const Model& m) : model_(&m) {
  const auto& layers = m.layers();
  std::vector<int> consumers(layers.size(), 0);
  for (const auto& l : layers) {
    if (l.input_index >= 0) ++consumers[static_cast<std::size_t>(l.input_index)];
    if (l.add_index >= 0) ++consumers[static_cast<std::size_t>(l.add_index)];
  }

  nodes_.resize(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    Node& n = nodes_[i];
    n.params = l.param_count;
    n.elements = element_count(l.output_shape);
    n.macs = layer_macs(l);
    n.buffer = static_cast<int>(i);

    const int in = l.input_index;
    if (l.kind == LayerKind::Flatten) {
      n.stores = false;
    } else if (l.kind == LayerKind::AaRelu && in >= 0 &&
               layers[static_cast<std::size_t>(in)].kind != LayerKind::Flatten &&
               consumers[static_cast<std::size_t>(in)] == 1) {
      n.stores = false;
      n.buffer = nodes_[static_cast<std::size_t>(in)].buffer;
    }

    // Latency is scaled by the activation feeding this layer, looking
    // through flatten views.
    int feeder = in;
    while (feeder >= 0 && layers[static_cast<std::size_t>(feeder)].kind == LayerKind::Flatten) {
      feeder = layers[static_cast<std::size_t>(feeder)].input_index;
    }
    if (feeder >= 0 && layers[static_cast<std::size_t>(feeder)].kind == LayerKind::AaRelu) n.feeder = feeder;
  }
}

void CostModel::resolve(const RuntimeConfig& config, std::vector<int>& buffer_bits,
                        std::vector<const LayerRuntimeConfig*>& act) const {
  const auto& layers = model_->layers();
  buffer_bits.assign(layers.size(), 32);
  act.assign(layers.size(), nullptr);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].kind != LayerKind::AaRelu) continue;
    auto it = config.find(layers[i].id);
    if (it == config.end()) continue;
    act[i] = &it->second;
    buffer_bits[static_cast<std::size_t>(nodes_[i].buffer)] = bits(it->second.precision);
  }
}

std::vector<LayerCost> CostModel::layer_costs(const RuntimeConfig& config) const {
  std::vector<int> buffer_bits;
  std::vector<const LayerRuntimeConfig*> act;
  resolve(config, buffer_bits, act);

  const auto& layers = model_->layers();
  std::vector<LayerCost> out(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Node& n = nodes_[i];
    LayerCost& c = out[i];
    c.layer_id = layers[i].id;
    c.kind = layers[i].kind;
    c.param_count = n.params;
    c.param_bytes = n.params * 4;
    if (n.stores) {
      c.activation_elements = n.elements;
      c.activation_bits = buffer_bits[i];
      c.activation_bytes = (n.elements * static_cast<std::uint64_t>(c.activation_bits) + 7) / 8;
    } else {
      c.activation_bits = buffer_bits[static_cast<std::size_t>(n.buffer)];
    }
    c.macs = n.macs;
    double factor = 1.0;
    if (n.feeder >= 0 && act[static_cast<std::size_t>(n.feeder)]) {
      const LayerRuntimeConfig& a = *act[static_cast<std::size_t>(n.feeder)];
      factor = bits(a.precision) / 32.0 * (1.0 - a.sparsity);
    }
    c.latency = static_cast<double>(n.macs) * factor;
  }
  return out;
}

CostReport CostModel::evaluate(const RuntimeConfig& config) const {
  CostReport r;
  for (const auto& c : layer_costs(config)) {
    r.param_bytes += c.param_bytes;
    r.activation_bytes += c.activation_bytes;
    r.latency_proxy += c.latency;
  }
  r.total_bytes = r.param_bytes + r.activation_bytes;
  return r;
}

std::uint64_t CostModel::memory_bytes(const RuntimeConfig& config) const {
  return evaluate(config).total_bytes;
}

double CostModel::latency(const RuntimeConfig& config) const { return evaluate(config).latency_proxy; }

CostReport memory_cost(const Model& m, const RuntimeConfig& config) { return CostModel(m).evaluate(config); }
CostReport memory_cost(const Model& m) { return memory_cost(m, m.runtime_config()); }
double latency_proxy(const Model& m, const RuntimeConfig& config) { return CostModel(m).latency(config); }
double latency_proxy(const Model& m) { return latency_proxy(m, m.runtime_config()); }

std::string cost_report_json(const CostReport& r, const std::vector<LayerCost>& layers) {
  nlohmann::json j;
  j["param_bytes"] = r.param_bytes;
  j["activation_bytes"] = r.activation_bytes;
  j["total_bytes"] = r.total_bytes;
  j["latency_proxy"] = r.latency_proxy;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : layers) {
    arr.push_back({{"layer_id", c.layer_id},
                   {"kind", std::string(to_string(c.kind))},
                   {"param_count", c.param_count},
                   {"param_bytes", c.param_bytes},
                   {"activation_elements", c.activation_elements},
                   {"activation_bits", c.activation_bits},
                   {"activation_bytes", c.activation_bytes},
                   {"macs", c.macs},
                   {"latency_proxy", c.latency}});
  }
  j["layers"] = std::move(arr);
  return j.dump(2);
}

void write_cost_csv(std::ostream& out, const CostReport& r, const std::vector<LayerCost>& layers) {
  out << "layer_id,kind,param_count,param_bytes,activation_elements,activation_bits,activation_bytes,"
         "total_bytes,macs,latency_proxy\n";
  for (const auto& c : layers) {
    out << c.layer_id << ',' << to_string(c.kind) << ',' << c.param_count << ',' << c.param_bytes << ','
        << c.activation_elements << ',' << c.activation_bits << ',' << c.activation_bytes << ','
        << c.param_bytes + c.activation_bytes << ',' << c.macs << ',' << c.latency << '\n';
  }
  out << "TOTAL,," << r.param_bytes / 4 << ',' << r.param_bytes << ",,," << r.activation_bytes << ','
      << r.total_bytes << ",," << r.latency_proxy << '\n';
}

}  // namespace adact
