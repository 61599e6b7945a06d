#pragma once

#include <stdexcept>
#include <string>

namespace stepprune {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A documented precondition was violated by the caller.
struct ContractViolation : Error {
  using Error::Error;
};

/// Malformed input data or file contents.
struct FormatError : Error {
  using Error::Error;
};

/// Invalid configuration (CLI exit code 2).
struct ConfigError : Error {
  using Error::Error;
};

/// HTTP transport failure after retries. Carries no verdict or payload;
/// the caller decides whether to degrade or abort.
struct TransportError : Error {
  using Error::Error;
};

/// Training could not proceed (single-class data, emptied dataset, ...).
struct TrainingError : Error {
  using Error::Error;
};

}  // namespace stepprune
