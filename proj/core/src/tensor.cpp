// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#include "adact/tensor.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include "adact/error.hpp"

namespace adact {

namespace {

struct FloatFormat {
  int mantissa_bits;
  int min_exponent;  // exponent of the smallest normal value
  double max_finite;
};

constexpr FloatFormat kHalf{10, -14, 65504.0};
constexpr FloatFormat kE4M3{3, -6, 448.0};

double round_to_format(double x, const FloatFormat& fmt) {
  if (x == 0.0) return x;
  const double a = std::fabs(x);
  int e = 0;
  std::frexp(a, &e);  // a = f * 2^e, f in [0.5, 1)
  const int exponent = std::max(e - 1, fmt.min_exponent);
  const double quantum = std::ldexp(1.0, exponent - fmt.mantissa_bits);
  double r = std::nearbyint(a / quantum) * quantum;
  if (r > fmt.max_finite) r = fmt.max_finite;
  return std::copysign(r, x);
}

void require_finite(std::span<const float> values) {
  for (float v : values) {
    if (!std::isfinite(v)) throw NumericError("cast: tensor contains a non-finite value");
  }
}

}  // namespace

std::string_view to_string(Precision p) noexcept {
  switch (p) {
    case Precision::FP32: return "fp32";
    case Precision::FP16: return "fp16";
    case Precision::FP8: return "fp8";
    case Precision::INT4: return "int4";
    case Precision::INT2: return "int2";
  }
  return "fp32";
}

std::string_view to_string(PrecisionKind k) noexcept {
  return k == PrecisionKind::Float ? "float" : "integer";
}

Precision parse_precision(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Precision p : kAllPrecisions) {
    if (lower == to_string(p)) return p;
  }
  throw InvalidInputError("unknown precision '" + std::string(name) + "'");
}

Precision precision_from_bits(int bit_width, PrecisionKind k) {
  for (Precision p : kAllPrecisions) {
    if (bits(p) == bit_width && kind(p) == k) return p;
  }
  throw InvalidInputError("no " + std::string(to_string(k)) + " precision with " +
                          std::to_string(bit_width) + " bits");
}

std::size_t element_count(const Shape& shape) noexcept {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<float> data, Precision storage, std::optional<float> scale)
    : shape_(std::move(shape)), data_(std::move(data)), storage_(storage), scale_(scale) {
  for (std::size_t d : shape_) {
    if (d == 0) throw InvalidInputError("tensor dims must be positive, got " + shape_to_string(shape_));
  }
  if (element_count(shape_) != data_.size()) {
    throw InvalidInputError("tensor shape " + shape_to_string(shape_) + " does not match " +
                            std::to_string(data_.size()) + " values");
  }
  if (scale_ && !(*scale_ > 0.0f)) throw InvalidInputError("tensor scale must be positive");
}

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0f); }

Tensor Tensor::filled(Shape shape, float value) {
  const std::size_t n = element_count(shape);
  return Tensor(std::move(shape), std::vector<float>(n, value));
}

Tensor Tensor::reshaped(Shape shape) const {
  return Tensor(std::move(shape), data_, storage_, scale_);
}

float round_to_float_format(float x, Precision p) {
  switch (p) {
    case Precision::FP32: return x;
    case Precision::FP16: return static_cast<float>(round_to_format(x, kHalf));
    case Precision::FP8: return static_cast<float>(round_to_format(x, kE4M3));
    default: break;
  }
  throw InvalidInputError("round_to_float_format: " + std::string(to_string(p)) +
                          " is not a float format");
}

float derive_scale(std::span<const float> values, Precision p) {
  if (!is_integer(p)) throw InvalidInputError("derive_scale: precision must be an integer format");
  float max_abs = 0.0f;
  for (float v : values) max_abs = std::max(max_abs, std::fabs(v));
  if (max_abs == 0.0f) return 1.0f;
  return max_abs / static_cast<float>(max_level(p));
}

Tensor cast(const Tensor& t, Precision p, std::optional<QuantParams> qp) {
  require_finite(t.data());
  std::vector<float> out(t.data().begin(), t.data().end());

  if (!is_integer(p)) {
    if (p != Precision::FP32) {
      for (float& v : out) v = round_to_float_format(v, p);
    }
    return Tensor(t.shape(), std::move(out), p);
  }

  float scale = 0.0f;
  if (qp) {
    scale = qp->scale;
    if (!(scale > 0.0f) || !std::isfinite(scale)) {
      throw InvalidInputError("cast: quantization scale must be positive and finite");
    }
  } else if (t.storage_precision() == p && t.scale()) {
    scale = *t.scale();
  } else {
    scale = derive_scale(t.data(), p);
  }

  const double s = scale;
  const double level = max_level(p);
  for (float& v : out) {
    const double q = std::clamp(std::round(static_cast<double>(v) / s), -level, level);
    v = static_cast<float>(q * s);
  }
  return Tensor(t.shape(), std::move(out), p, scale);
}

double measure_sparsity(std::span<const float> values) {
  if (values.empty()) throw InvalidInputError("measure_sparsity: empty tensor");
  const auto zeros = std::count(values.begin(), values.end(), 0.0f);
  return static_cast<double>(zeros) / static_cast<double>(values.size());
}

double measure_sparsity(const Tensor& t) { return measure_sparsity(t.data()); }

std::vector<HistogramBin> histogram(std::span<const float> values, std::size_t n_bins) {
  if (n_bins == 0) throw InvalidInputError("histogram: n_bins must be at least 1");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::size_t zeros = 0;
  for (float v : values) {
    if (!std::isfinite(v)) throw NumericError("histogram: non-finite value");
    if (v == 0.0f) {
      ++zeros;
      continue;
    }
    lo = std::min(lo, static_cast<double>(v));
    hi = std::max(hi, static_cast<double>(v));
  }

  std::vector<HistogramBin> bins;
  bins.reserve(n_bins + 1);
  bins.push_back({0.0, 0.0, zeros, true});
  if (zeros == values.size()) return bins;

  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) {
    const double b_lo = lo + width * static_cast<double>(i);
    const double b_hi = (i + 1 == n_bins) ? hi : lo + width * static_cast<double>(i + 1);
    bins.push_back({b_lo, b_hi, 0, false});
  }
  for (float v : values) {
    if (v == 0.0f) continue;
    std::size_t idx = 0;
    if (width > 0.0) {
      idx = static_cast<std::size_t>((static_cast<double>(v) - lo) / width);
      idx = std::min(idx, n_bins - 1);
    }
    ++bins[idx + 1].count;
  }
  return bins;
}

std::vector<HistogramBin> histogram(const Tensor& t, std::size_t n_bins) {
  return histogram(t.data(), n_bins);
}

}  // namespace adact
