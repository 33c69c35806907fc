// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

// Reference CPU forward pass. Accumulation is in double and each layer's
// output is rounded to FP32 once.

#include <algorithm>
#include <cmath>
#include <limits>

#include "adact/activation.hpp"
#include "adact/error.hpp"
#include "adact/graph.hpp"

namespace adact {

namespace {

using Buffer = std::vector<float>;

void conv2d(const LayerSpec& l, std::span<const float> x, std::span<const float> w, Buffer& y) {
  const std::size_t cin = l.input_shape[0], h = l.input_shape[1], wd = l.input_shape[2];
  const std::size_t cout = l.output_shape[0], ho = l.output_shape[1], wo = l.output_shape[2];
  const std::size_t k = l.geometry.kernel, s = l.geometry.stride;
  const auto pad = static_cast<std::ptrdiff_t>(l.geometry.padding);
  const float* bias = l.geometry.bias ? w.data() + cout * cin * k * k : nullptr;

  y.assign(cout * ho * wo, 0.0f);
  for (std::size_t oc = 0; oc < cout; ++oc) {
    const float* wk = w.data() + oc * cin * k * k;
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        double acc = bias ? bias[oc] : 0.0;
        for (std::size_t ic = 0; ic < cin; ++ic) {
          const float* xc = x.data() + ic * h * wd;
          const float* wc = wk + ic * k * k;
          for (std::size_t ky = 0; ky < k; ++ky) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s + ky) - pad;
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s + kx) - pad;
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(wd)) continue;
              acc += static_cast<double>(xc[iy * wd + ix]) * wc[ky * k + kx];
            }
          }
        }
        y[(oc * ho + oy) * wo + ox] = static_cast<float>(acc);
      }
    }
  }
}

void depthwise_conv2d(const LayerSpec& l, std::span<const float> x, std::span<const float> w, Buffer& y) {
  const std::size_t c = l.input_shape[0], h = l.input_shape[1], wd = l.input_shape[2];
  const std::size_t ho = l.output_shape[1], wo = l.output_shape[2];
  const std::size_t k = l.geometry.kernel, s = l.geometry.stride;
  const auto pad = static_cast<std::ptrdiff_t>(l.geometry.padding);
  const float* bias = l.geometry.bias ? w.data() + c * k * k : nullptr;

  y.assign(c * ho * wo, 0.0f);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const float* xc = x.data() + ch * h * wd;
    const float* wc = w.data() + ch * k * k;
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        double acc = bias ? bias[ch] : 0.0;
        for (std::size_t ky = 0; ky < k; ++ky) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s + ky) - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kx = 0; kx < k; ++kx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s + kx) - pad;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(wd)) continue;
            acc += static_cast<double>(xc[iy * wd + ix]) * wc[ky * k + kx];
          }
        }
        y[(ch * ho + oy) * wo + ox] = static_cast<float>(acc);
      }
    }
  }
}

void dense(const LayerSpec& l, std::span<const float> x, std::span<const float> w, Buffer& y) {
  const std::size_t in = x.size(), out = l.geometry.out_features;
  const float* bias = l.geometry.bias ? w.data() + out * in : nullptr;
  y.assign(out, 0.0f);
  for (std::size_t o = 0; o < out; ++o) {
    const float* row = w.data() + o * in;
    double acc = bias ? bias[o] : 0.0;
    for (std::size_t i = 0; i < in; ++i) acc += static_cast<double>(x[i]) * row[i];
    y[o] = static_cast<float>(acc);
  }
}

// Padded positions are excluded from both max and average.
void pool(const LayerSpec& l, std::span<const float> x, Buffer& y, bool is_max) {
  const std::size_t c = l.input_shape[0], h = l.input_shape[1], wd = l.input_shape[2];
  const std::size_t ho = l.output_shape[1], wo = l.output_shape[2];
  const std::size_t k = l.geometry.kernel, s = l.geometry.stride;
  const auto pad = static_cast<std::ptrdiff_t>(l.geometry.padding);

  y.assign(c * ho * wo, 0.0f);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const float* xc = x.data() + ch * h * wd;
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        double acc = is_max ? -std::numeric_limits<double>::infinity() : 0.0;
        std::size_t n = 0;
        for (std::size_t ky = 0; ky < k; ++ky) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s + ky) - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kx = 0; kx < k; ++kx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s + kx) - pad;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(wd)) continue;
            const double v = xc[iy * wd + ix];
            acc = is_max ? std::max(acc, v) : acc + v;
            ++n;
          }
        }
        y[(ch * ho + oy) * wo + ox] = static_cast<float>(is_max ? acc : acc / static_cast<double>(n));
      }
    }
  }
}

void softmax(std::span<const float> x, Buffer& y) {
  const double mx = *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  std::vector<double> e(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    e[i] = std::exp(static_cast<double>(x[i]) - mx);
    sum += e[i];
  }
  y.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = static_cast<float>(e[i] / sum);
}

}  // namespace

std::vector<Tensor> forward_trace(const Model& m, const RuntimeConfig& config, const Tensor& input,
                                  const LayerHook& hook) {
  if (input.shape() != m.input_shape()) {
    throw InvalidInputError("forward: input shape " + shape_to_string(input.shape()) +
                            " does not match model input " + shape_to_string(m.input_shape()));
  }
  if (!m.has_weights()) {
    throw InvalidInputError("forward: model '" + m.name() + "' has no weights (descriptor mode)");
  }

  const auto& layers = m.layers();
  std::vector<Tensor> outputs;
  outputs.reserve(layers.size());
  Buffer y;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    const Tensor& in = l.input_index < 0 ? input : outputs[static_cast<std::size_t>(l.input_index)];
    const auto x = in.data();

    Tensor out;
    switch (l.kind) {
      case LayerKind::Conv2d:
        conv2d(l, x, m.layer_weights(i), y);
        break;
      case LayerKind::DepthwiseConv2d:
        depthwise_conv2d(l, x, m.layer_weights(i), y);
        break;
      case LayerKind::Dense:
        dense(l, x, m.layer_weights(i), y);
        break;
      case LayerKind::MaxPool:
        pool(l, x, y, true);
        break;
      case LayerKind::AvgPool:
        pool(l, x, y, false);
        break;
      case LayerKind::Flatten:
        y.assign(x.begin(), x.end());
        break;
      case LayerKind::Softmax:
        softmax(x, y);
        break;
      case LayerKind::AaRelu: {
        auto it = config.find(l.id);
        const LayerRuntimeConfig cfg = it == config.end() ? LayerRuntimeConfig{} : it->second;
        // Full sparsity zeroes the layer even where inputs exceed the calibrated cutoff.
      Tensor activated = cfg.sparsity >= 1.0 ? Tensor::zeros(in.shape()) : aa_relu(in, cfg.threshold);
        out = cfg.precision == Precision::FP32 ? std::move(activated) : cast(activated, cfg.precision);
        break;
      }
    }

    if (l.kind != LayerKind::AaRelu) {
      if (l.add_index >= 0) {
        const auto skip = outputs[static_cast<std::size_t>(l.add_index)].data();
        for (std::size_t j = 0; j < y.size(); ++j) y[j] += skip[j];
      }
      out = Tensor(l.output_shape, std::move(y));
      y = Buffer{};
    }

    for (float v : out.data()) {
      if (!std::isfinite(v)) throw NumericError("forward: non-finite value in output of layer '" + l.id + "'");
    }
    if (hook) {
      if (auto replaced = hook(i, out)) {
        if (replaced->shape() != l.output_shape) {
          throw InvalidInputError("forward: hook replaced layer '" + l.id + "' output with wrong shape");
        }
        out = std::move(*replaced);
      }
    }
    outputs.push_back(std::move(out));
  }
  return outputs;
}

Tensor forward(const Model& m, const RuntimeConfig& config, const Tensor& input) {
  auto outputs = forward_trace(m, config, input);
  return std::move(outputs.back());
}

Tensor forward(const Model& m, const Tensor& input) { return forward(m, m.runtime_config(), input); }

}  // namespace adact
