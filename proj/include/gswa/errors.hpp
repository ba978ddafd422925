// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace gswa {

// Base of every error raised by the library. The CLI maps subclasses to exit
// codes, so new error kinds should derive from one of the categories below.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Inconsistent or invalid configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller-supplied data (images, files) is unusable.
class InputError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or numerically degenerate input (zero norm, zero variance).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Request cannot be satisfied for this input (e.g. removing more tiles than exist).
class RangeError : public Error {
 public:
  using Error::Error;
};

// API misuse, e.g. calling backward on a non-scalar node.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents or failed reads/writes.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace gswa
