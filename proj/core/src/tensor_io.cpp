// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#include "adact/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "adact/error.hpp"

namespace adact {

namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

std::uint32_t read_u32(std::istream& in, const char* what) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw InvalidInputError(std::string("aat: truncated header reading ") + what);
  }
  return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
         (std::uint32_t{b[3]} << 24);
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff),
                              static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

}  // namespace

Tensor read_aat(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kAatMagic, 4) != 0) {
    throw InvalidInputError("aat: bad magic (expected AAT1)");
  }
  const std::uint32_t rank = read_u32(in, "rank");
  if (rank == 0 || rank > 8) throw InvalidInputError("aat: unsupported rank " + std::to_string(rank));
  Shape shape(rank);
  for (auto& d : shape) d = read_u32(in, "dims");
  char dtype = 0;
  if (!in.read(&dtype, 1)) throw InvalidInputError("aat: truncated header reading dtype");
  if (static_cast<std::uint8_t>(dtype) != kAatDtypeFp32) {
    throw InvalidInputError("aat: unsupported dtype code " +
                            std::to_string(static_cast<int>(static_cast<std::uint8_t>(dtype))));
  }
  for (auto d : shape) {
    if (d == 0) throw InvalidInputError("aat: zero dimension in " + shape_to_string(shape));
  }
  const std::size_t n = element_count(shape);
  std::vector<float> data(n);
  std::vector<unsigned char> raw(n * 4);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw InvalidInputError("aat: payload shorter than " + std::to_string(n) + " FP32 values");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t u = std::uint32_t{raw[4 * i]} | (std::uint32_t{raw[4 * i + 1]} << 8) |
                            (std::uint32_t{raw[4 * i + 2]} << 16) |
                            (std::uint32_t{raw[4 * i + 3]} << 24);
    data[i] = std::bit_cast<float>(u);
  }
  return Tensor(std::move(shape), std::move(data));
}

Tensor read_aat(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open " + path.string());
  return read_aat(in);
}

void write_aat(std::ostream& out, const Tensor& t) {
  out.write(kAatMagic, 4);
  write_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape()) write_u32(out, static_cast<std::uint32_t>(d));
  out.put(static_cast<char>(kAatDtypeFp32));
  for (float v : t.data()) write_u32(out, std::bit_cast<std::uint32_t>(v));
  if (!out) throw InvalidInputError("aat: write failed");
}

void write_aat(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot open " + path.string() + " for writing");
  write_aat(out, t);
}

}  // namespace adact
