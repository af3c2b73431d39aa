#pragma once

#include <stdexcept>
#include <string>

namespace derain {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/feature-map dimensions do not satisfy an operation's contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid or inconsistent configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// File decoding/encoding or filesystem failures.
class IoError : public Error {
 public:
  using Error::Error;
};

// Affected/clean corpus files that cannot be matched one-to-one.
class PairingError : public Error {
 public:
  using Error::Error;
};

// A required external resource (e.g. extractor weights) is missing.
class ResourceError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or empty reductions where a number is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Checkpoint/config combinations that cannot be reconciled.
class IncompatibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace derain
