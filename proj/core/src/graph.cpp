// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#include "adact/graph.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "adact/error.hpp"
#include "adact/tensor_io.hpp"

namespace adact {

namespace {

using json = nlohmann::json;

struct KindName {
  LayerKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {LayerKind::Conv2d, "conv2d"},   {LayerKind::DepthwiseConv2d, "depthwise_conv2d"},
    {LayerKind::Dense, "dense"},     {LayerKind::MaxPool, "maxpool"},
    {LayerKind::AvgPool, "avgpool"}, {LayerKind::Flatten, "flatten"},
    {LayerKind::Softmax, "softmax"}, {LayerKind::AaRelu, "aa_relu"},
};

[[noreturn]] void layer_error(const LayerSpec& l, const std::string& msg) {
  throw InvalidInputError("layer '" + l.id + "': " + msg);
}

std::size_t conv_extent(const LayerSpec& l, std::size_t in) {
  const auto& g = l.geometry;
  if (in + 2 * g.padding < g.kernel) {
    layer_error(l, "kernel " + std::to_string(g.kernel) + " larger than padded input " +
                       std::to_string(in + 2 * g.padding));
  }
  return (in + 2 * g.padding - g.kernel) / g.stride + 1;
}

void require_spatial(const LayerSpec& l, const Shape& in) {
  if (in.size() != 3) layer_error(l, "expects a [C, H, W] input, got " + shape_to_string(in));
  if (l.geometry.kernel == 0) layer_error(l, "kernel must be positive");
  if (l.geometry.stride == 0) layer_error(l, "stride must be positive");
}

// Fills output_shape and param_count from input_shape and geometry.
void resolve_layer(LayerSpec& l) {
  const Shape& in = l.input_shape;
  const auto& g = l.geometry;
  switch (l.kind) {
    case LayerKind::Conv2d: {
      require_spatial(l, in);
      if (g.out_channels == 0) layer_error(l, "out_channels must be positive");
      l.output_shape = {g.out_channels, conv_extent(l, in[1]), conv_extent(l, in[2])};
      l.param_count = g.out_channels * in[0] * g.kernel * g.kernel + (g.bias ? g.out_channels : 0);
      break;
    }
    case LayerKind::DepthwiseConv2d: {
      require_spatial(l, in);
      l.output_shape = {in[0], conv_extent(l, in[1]), conv_extent(l, in[2])};
      l.param_count = in[0] * g.kernel * g.kernel + (g.bias ? in[0] : 0);
      break;
    }
    case LayerKind::Dense: {
      if (g.out_features == 0) layer_error(l, "out_features must be positive");
      l.output_shape = {g.out_features};
      l.param_count = g.out_features * element_count(in) + (g.bias ? g.out_features : 0);
      break;
    }
    case LayerKind::MaxPool:
    case LayerKind::AvgPool: {
      require_spatial(l, in);
      if (g.padding * 2 > g.kernel) {
        layer_error(l, "padding must be at most half the kernel");
      }
      l.output_shape = {in[0], conv_extent(l, in[1]), conv_extent(l, in[2])};
      l.param_count = 0;
      break;
    }
    case LayerKind::Flatten:
      l.output_shape = {element_count(in)};
      l.param_count = 0;
      break;
    case LayerKind::Softmax:
    case LayerKind::AaRelu:
      l.output_shape = in;
      l.param_count = 0;
      break;
  }
  if (g.add && l.kind != LayerKind::Conv2d && l.kind != LayerKind::DepthwiseConv2d &&
      l.kind != LayerKind::Dense) {
    layer_error(l, "residual add is only supported on conv2d, depthwise_conv2d and dense");
  }
}

std::size_t get_size(const json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw InvalidInputError(std::string("manifest: '") + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

Shape parse_shape(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw InvalidInputError(std::string("manifest: ") + what + " must be a non-empty array");
  Shape s;
  for (const auto& d : j) {
    if (!d.is_number_integer() || d.get<long long>() <= 0) {
      throw InvalidInputError(std::string("manifest: ") + what + " dims must be positive integers");
    }
    s.push_back(d.get<std::size_t>());
  }
  return s;
}

}  // namespace

std::string_view to_string(LayerKind k) noexcept {
  for (const auto& kn : kKindNames) {
    if (kn.kind == k) return kn.name;
  }
  return "unknown";
}

LayerKind parse_layer_kind(std::string_view name) {
  for (const auto& kn : kKindNames) {
    if (kn.name == name) return kn.kind;
  }
  throw InvalidInputError("unknown layer kind '" + std::string(name) + "'");
}

bool has_weights(LayerKind k) noexcept {
  return k == LayerKind::Conv2d || k == LayerKind::DepthwiseConv2d || k == LayerKind::Dense;
}

Model Model::build(std::string name, Shape input_shape, std::size_t class_count,
                   std::vector<LayerSpec> layers, std::optional<std::vector<float>> weights) {
  if (layers.empty()) throw InvalidInputError("model '" + name + "' has no layers");
  if (input_shape.empty()) throw InvalidInputError("model input_shape is empty");
  for (auto d : input_shape) {
    if (d == 0) throw InvalidInputError("model input_shape dims must be positive");
  }

  Model m;
  m.name_ = std::move(name);
  m.input_shape_ = std::move(input_shape);
  m.class_count_ = class_count;

  std::map<std::string, int, std::less<>> index_of;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    LayerSpec& l = layers[i];
    if (l.id.empty()) throw InvalidInputError("layer " + std::to_string(i) + " has an empty id");
    if (index_of.count(l.id)) throw InvalidInputError("duplicate layer id '" + l.id + "'");

    if (l.input) {
      auto it = index_of.find(*l.input);
      if (it == index_of.end()) layer_error(l, "input '" + *l.input + "' is not an earlier layer");
      l.input_index = it->second;
    } else {
      l.input_index = static_cast<int>(i) - 1;
    }
    l.input_shape = l.input_index < 0 ? m.input_shape_ : layers[l.input_index].output_shape;
    resolve_layer(l);

    l.add_index = -1;
    if (l.geometry.add) {
      auto it = index_of.find(*l.geometry.add);
      if (it == index_of.end()) layer_error(l, "add source '" + *l.geometry.add + "' is not an earlier layer");
      l.add_index = it->second;
      if (layers[l.add_index].output_shape != l.output_shape) {
        layer_error(l, "add source '" + *l.geometry.add + "' has shape " +
                           shape_to_string(layers[l.add_index].output_shape) + ", expected " +
                           shape_to_string(l.output_shape));
      }
    }

    if (!adact::has_weights(l.kind)) {
      if (l.weight_ref && l.weight_ref->length > 0) layer_error(l, std::string(to_string(l.kind)) + " layers carry no weights");
      l.weight_ref.reset();
    } else if (weights) {
      if (!l.weight_ref) l.weight_ref = WeightRef{cursor, l.param_count};
      const WeightRef& ref = *l.weight_ref;
      if (ref.length != l.param_count) {
        layer_error(l, "weight_ref length " + std::to_string(ref.length) + " does not match " +
                           std::to_string(l.param_count) + " parameters implied by its shape");
      }
      if (ref.offset + ref.length > weights->size()) {
        layer_error(l, "weight_ref [" + std::to_string(ref.offset) + ", " +
                           std::to_string(ref.offset + ref.length) + ") exceeds weight blob of " +
                           std::to_string(weights->size()) + " values");
      }
      cursor = ref.offset + ref.length;
    }

    if (l.kind == LayerKind::AaRelu) m.activation_ids_.push_back(l.id);
    index_of.emplace(l.id, static_cast<int>(i));
  }

  m.layers_ = std::move(layers);
  if (class_count == 0) throw InvalidInputError("class_count must be positive");
  if (element_count(m.output_shape()) != class_count) {
    throw InvalidInputError("model output " + shape_to_string(m.output_shape()) +
                            " does not match class_count " + std::to_string(class_count));
  }
  if (weights) m.weights_ = std::make_shared<const std::vector<float>>(std::move(*weights));
  m.config_ = m.baseline_config();
  return m;
}

std::optional<std::size_t> Model::find_layer(std::string_view id) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].id == id) return i;
  }
  return std::nullopt;
}

std::span<const float> Model::weights() const noexcept {
  if (!weights_) return {};
  return *weights_;
}

std::span<const float> Model::layer_weights(std::size_t i) const {
  const LayerSpec& l = layers_.at(i);
  if (!weights_) throw InvalidInputError("model '" + name_ + "' has no weights (descriptor mode)");
  if (!l.weight_ref) return {};
  return std::span<const float>(*weights_).subspan(l.weight_ref->offset, l.weight_ref->length);
}

bool Model::is_activation(std::string_view id) const {
  for (const auto& a : activation_ids_) {
    if (a == id) return true;
  }
  return false;
}

RuntimeConfig Model::baseline_config() const {
  RuntimeConfig c;
  for (const auto& id : activation_ids_) c.emplace(id, LayerRuntimeConfig{});
  return c;
}

RuntimeConfig Model::complete_config(const RuntimeConfig& partial) const {
  RuntimeConfig c = baseline_config();
  for (const auto& [id, cfg] : partial) {
    auto it = c.find(id);
    if (it == c.end()) throw InvalidInputError("runtime config names '" + id + "', which is not an aa_relu layer");
    if (!(cfg.threshold >= 0.0f) || !std::isfinite(cfg.threshold)) {
      throw InvalidInputError("runtime config for '" + id + "': threshold must be finite and >= 0");
    }
    it->second = cfg;
  }
  return c;
}

void Model::set_runtime_config(const RuntimeConfig& config) { config_ = complete_config(config); }

Model parse_model_manifest(std::string_view json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidInputError(std::string("manifest: ") + e.what());
  }
  try {
    const std::string name = doc.value("name", std::string("model"));
    const Shape input_shape = parse_shape(doc.at("input_shape"), "input_shape");
    const std::size_t class_count = get_size(doc, "class_count", 0);
    const json& jl = doc.at("layers");
    if (!jl.is_array() || jl.empty()) throw InvalidInputError("manifest: 'layers' must be a non-empty array");

    const bool with_weights = doc.contains("weights_file") && !doc.at("weights_file").is_null();
    std::vector<LayerSpec> layers;
    for (const auto& j : jl) {
      LayerSpec l;
      l.id = j.at("id").get<std::string>();
      l.kind = parse_layer_kind(j.at("kind").get<std::string>());
      if (j.contains("input") && !j.at("input").is_null()) l.input = j.at("input").get<std::string>();
      const json geo = j.value("geometry", json::object());
      const bool pool = l.kind == LayerKind::MaxPool || l.kind == LayerKind::AvgPool;
      l.geometry.out_channels = get_size(geo, "out_channels", 0);
      l.geometry.out_features = get_size(geo, "out_features", 0);
      l.geometry.kernel = get_size(geo, "kernel", 0);
      l.geometry.stride = get_size(geo, "stride", pool ? l.geometry.kernel : 1);
      l.geometry.padding = get_size(geo, "padding", 0);
      l.geometry.bias = geo.value("bias", true);
      if (geo.contains("add") && !geo.at("add").is_null()) l.geometry.add = geo.at("add").get<std::string>();
      if (j.contains("weight_ref") && !j.at("weight_ref").is_null()) {
        const json& w = j.at("weight_ref");
        l.weight_ref = WeightRef{get_size(w, "offset", 0), get_size(w, "length", 0)};
      } else if (with_weights && has_weights(l.kind)) {
        throw InvalidInputError("layer '" + l.id + "': missing weight_ref");
      }
      layers.push_back(std::move(l));
    }

    std::optional<std::vector<float>> weights;
    if (with_weights) {
      const std::filesystem::path wp = base_dir / doc.at("weights_file").get<std::string>();
      weights = std::move(read_aat(wp)).release();
    }
    return Model::build(name, input_shape, class_count, std::move(layers), std::move(weights));
  } catch (const json::exception& e) {
    throw InvalidInputError(std::string("manifest: ") + e.what());
  }
}

Model load_model(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw InvalidInputError("cannot open manifest " + manifest_path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model_manifest(ss.str(), manifest_path.parent_path());
}

std::string model_manifest_json(const Model& m, std::string_view weights_file) {
  json doc;
  doc["name"] = m.name();
  doc["input_shape"] = m.input_shape();
  doc["class_count"] = m.class_count();
  json layers = json::array();
  for (const auto& l : m.layers()) {
    json j;
    j["id"] = l.id;
    j["kind"] = std::string(to_string(l.kind));
    if (l.input) j["input"] = *l.input;
    json g = json::object();
    const auto& geo = l.geometry;
    switch (l.kind) {
      case LayerKind::Conv2d:
        g["out_channels"] = geo.out_channels;
        [[fallthrough]];
      case LayerKind::DepthwiseConv2d:
        g["kernel"] = geo.kernel;
        g["stride"] = geo.stride;
        g["padding"] = geo.padding;
        g["bias"] = geo.bias;
        break;
      case LayerKind::Dense:
        g["out_features"] = geo.out_features;
        g["bias"] = geo.bias;
        break;
      case LayerKind::MaxPool:
      case LayerKind::AvgPool:
        g["kernel"] = geo.kernel;
        g["stride"] = geo.stride;
        g["padding"] = geo.padding;
        break;
      default:
        break;
    }
    if (geo.add) g["add"] = *geo.add;
    if (!g.empty()) j["geometry"] = g;
    if (l.weight_ref) j["weight_ref"] = {{"offset", l.weight_ref->offset}, {"length", l.weight_ref->length}};
    layers.push_back(std::move(j));
  }
  doc["layers"] = std::move(layers);
  if (!weights_file.empty()) doc["weights_file"] = std::string(weights_file);
  return doc.dump(2);
}

}  // namespace adact
