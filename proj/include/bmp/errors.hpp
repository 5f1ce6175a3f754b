#pragma once

#include <stdexcept>

namespace bmp {

/// A value left the set an operation is defined on (e.g. phi outside [0, 1]).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Experiment or model description failed validation.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Iterative solver or internal substepping did not meet its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Monte Carlo estimate is unusable (too many replicas hit the population cap).
class InvalidEstimate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bmp
