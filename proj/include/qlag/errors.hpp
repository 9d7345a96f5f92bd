#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qlag {

/// Invalid physical or numerical parameter (non-positive scale, bad grid size).
class ParameterError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the domain of a potential or local field.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Point outside the stored support of a commutation table.
class OutOfSupport : public std::out_of_range {
public:
  using std::out_of_range::out_of_range;
};

/// Malformed, truncated or mismatched binary table file.
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Iterative eigensolver failed to reach its residual tolerance.
class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string& what, std::vector<double> residuals)
      : std::runtime_error(what), residuals_(std::move(residuals)) {}

  const std::vector<double>& residuals() const noexcept { return residuals_; }

private:
  std::vector<double> residuals_;
};

}  // namespace qlag
