// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>

#include "adact/tensor.hpp"

namespace adact {

// ".aat" tensor files:
//   "AAT1" | u32 rank | rank x u32 dims | u8 dtype | payload
// All integers little-endian; dtype 0 is FP32 with a little-endian payload.
inline constexpr char kAatMagic[4] = {'A', 'A', 'T', '1'};
inline constexpr std::uint8_t kAatDtypeFp32 = 0;

Tensor read_aat(std::istream& in);
Tensor read_aat(const std::filesystem::path& path);

/// Writes values as FP32; storage precision is not recorded.
void write_aat(std::ostream& out, const Tensor& t);
void write_aat(const std::filesystem::path& path, const Tensor& t);

}  // namespace adact
