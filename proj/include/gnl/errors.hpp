// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace gnl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or parameter shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument value (negative threshold, empty list, bad enum name).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent model or graph configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Node index outside [0, N).
class IndexError : public Error {
 public:
  using Error::Error;
};

/// A function produced a non-finite value where a finite one was required.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// A theorem hypothesis (e.g. step size below 1/L) does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class LoadError : public Error {
 public:
  using Error::Error;
};

class NormalizationError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gnl
