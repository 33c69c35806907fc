// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace adact {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad files, bad shapes, arguments out of contract.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or other numeric breakdown during computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace adact
