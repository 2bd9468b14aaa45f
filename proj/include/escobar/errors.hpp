#pragma once

#include <stdexcept>
#include <string>

namespace escobar {

/// Invalid input or configuration (unsupported dimension, mismatched sizes, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed: lost positivity, Newton divergence, ill-conditioned fit.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace escobar
