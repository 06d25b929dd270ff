#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace ihnn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of two operands disagree (state dimension, parameter length, window length).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or argument values. The CLI maps this to a usage error.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File system or serialization failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, divergent fixed-point iteration or an aborted training run.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, std::optional<std::size_t> step = std::nullopt)
      : Error(step ? what + " (step " + std::to_string(*step) + ")" : what), step_(step) {}

  std::optional<std::size_t> step() const { return step_; }

 private:
  std::optional<std::size_t> step_;
};

inline void require_dims(std::size_t got, std::size_t expected, const char* what) {
  if (got != expected) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(expected) +
                         ", got " + std::to_string(got));
  }
}

}  // namespace ihnn
