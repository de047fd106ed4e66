#pragma once

#include <stdexcept>
#include <string>

namespace dislat {

/// Input outside the mathematical domain of an operation (non-finite x, zero norm, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Inconsistent or insufficient numerical configuration (truncation, grid, time step).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to converge or produced non-finite values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dislat
