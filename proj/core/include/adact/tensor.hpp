// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace adact {

/// Storage formats an activation can be cast to.
enum class Precision : std::uint8_t { FP32, FP16, FP8, INT4, INT2 };

enum class PrecisionKind : std::uint8_t { Float, Integer };

constexpr int bits(Precision p) noexcept {
  switch (p) {
    case Precision::FP32: return 32;
    case Precision::FP16: return 16;
    case Precision::FP8: return 8;
    case Precision::INT4: return 4;
    case Precision::INT2: return 2;
  }
  return 32;
}

constexpr PrecisionKind kind(Precision p) noexcept {
  return (p == Precision::INT4 || p == Precision::INT2) ? PrecisionKind::Integer
                                                        : PrecisionKind::Float;
}

constexpr bool is_integer(Precision p) noexcept { return kind(p) == PrecisionKind::Integer; }

/// Largest quantization level for a symmetric b-bit integer format: 2^(b-1) - 1.
constexpr int max_level(Precision p) noexcept { return (1 << (bits(p) - 1)) - 1; }

/// Lower-case name ("fp32", "int4", ...).
std::string_view to_string(Precision p) noexcept;
std::string_view to_string(PrecisionKind k) noexcept;
/// Accepts the names produced by to_string, case-insensitively. Throws InvalidInputError.
Precision parse_precision(std::string_view name);
/// Inverse of (bits, kind); throws InvalidInputError for combinations that do not exist.
Precision precision_from_bits(int bit_width, PrecisionKind k);

inline constexpr Precision kAllPrecisions[] = {Precision::FP32, Precision::FP16, Precision::FP8,
                                               Precision::INT4, Precision::INT2};

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape) noexcept;
std::string shape_to_string(const Shape& shape);

/// Per-tensor symmetric quantization parameters. Levels are
/// [-(2^(b-1)-1), 2^(b-1)-1]; there is no zero point.
struct QuantParams {
  float scale = 1.0f;
};

/// Dense row-major tensor. Values are held in FP32 (the working precision);
/// storage_precision records the format the values logically occupy. Tensors
/// are immutable once built.
class Tensor {
 public:
  Tensor() = default;
  /// Throws InvalidInputError when a dim is zero or the data length does not
  /// match the shape.
  Tensor(Shape shape, std::vector<float> data, Precision storage = Precision::FP32,
         std::optional<float> scale = std::nullopt);

  static Tensor zeros(Shape shape);
  static Tensor filled(Shape shape, float value);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::span<const float> data() const noexcept { return data_; }
  float operator[](std::size_t i) const noexcept { return data_[i]; }
  Precision storage_precision() const noexcept { return storage_; }
  /// Scale attached by an integer cast; empty for float storage.
  std::optional<float> scale() const noexcept { return scale_; }

  /// Same values and storage under a new shape of equal element count.
  Tensor reshaped(Shape shape) const;

  /// Moves the value buffer out; the tensor is left empty.
  std::vector<float> release() && { shape_.clear(); return std::move(data_); }

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  std::vector<float> data_;
  Precision storage_ = Precision::FP32;
  std::optional<float> scale_;
};

/// Round-trips every value through format `p` (quantize, then dequantize back
/// to FP32) and tags the result with storage precision `p`.
///
/// Float formats round to nearest-even and saturate at the largest finite
/// value of the format (FP16: IEEE binary16; FP8: 1-4-3 with bias 7, max 448,
/// no infinities). Integer formats use symmetric per-tensor linear
/// quantization with round-half-away-from-zero. When `qp` is empty the scale
/// is taken from the tensor's attached scale if it already has storage `p`,
/// otherwise derived as max|x| / (2^(b-1)-1). An all-zero tensor derives
/// scale 1 and maps to itself.
///
/// Throws NumericError on non-finite input and InvalidInputError on a
/// non-positive explicit scale.
Tensor cast(const Tensor& t, Precision p, std::optional<QuantParams> qp = std::nullopt);

/// Scalar round-trip through a float format (FP32, FP16 or FP8).
float round_to_float_format(float x, Precision p);

/// Scale cast() would derive for integer format `p`.
float derive_scale(std::span<const float> values, Precision p);

/// Fraction of elements exactly equal to zero. Throws InvalidInputError on an
/// empty tensor.
double measure_sparsity(const Tensor& t);
double measure_sparsity(std::span<const float> values);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  bool zero_bin = false;
};

/// Histogram with a dedicated leading bin for exact zeros followed by
/// `n_bins` equal-width bins over [min, max] of the non-zero values (the last
/// bin is closed). Counts sum to the element count.
std::vector<HistogramBin> histogram(std::span<const float> values, std::size_t n_bins);
std::vector<HistogramBin> histogram(const Tensor& t, std::size_t n_bins);

}  // namespace adact
