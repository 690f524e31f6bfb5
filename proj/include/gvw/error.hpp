#pragma once

#include <stdexcept>
#include <string>

namespace gvw {

/// Input outside the mathematical domain of an operation (negative budget,
/// share outside [0, 1], nonpositive decay for steady-state analysis, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// A numerical procedure could not produce a finite answer.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Integration failed at a specific model time.
class IntegrationError : public NumericError {
public:
  IntegrationError(const std::string& what, double time)
      : NumericError(what + " at t=" + std::to_string(time)), time_(time) {}

  double time() const noexcept { return time_; }

private:
  double time_;
};

/// Malformed or missing input data (files, columns, cells).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Parameter estimation could not produce a usable fit.
class EstimationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace gvw
