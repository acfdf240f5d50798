#pragma once

#include <stdexcept>
#include <string>

namespace ptk {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or sequence dimensions do not match what an operation expects.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A file on disk is missing, unreadable, or does not follow its container format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Dataset or argument values violate a documented invariant.
class ValueError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration; carries the dotted path of the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& message)
      : Error("config error at '" + key + "': " + message), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Training produced a non-finite loss or gradient.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace ptk
