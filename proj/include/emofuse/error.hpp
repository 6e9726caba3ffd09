// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace emofuse {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents or channel counts disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An argument is outside its documented domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Input has no usable content (e.g. every row masked).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// A NaN or Inf reached an op boundary.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// API misuse, such as a non-deterministic function handed to grad_check.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Invalid model or training configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File-level I/O failure (open, write, rename).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace emofuse
