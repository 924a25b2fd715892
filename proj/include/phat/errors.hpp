#pragma once

#include <stdexcept>
#include <string>

namespace phat {

// Base for every error the library raises on purpose. The CLI maps each
// subclass onto a distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes or resolutions that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A scalar argument out of its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration (bad config file, too few training pairs, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite activations, losses or parameters.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed or incompatible checkpoint archive.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace phat
