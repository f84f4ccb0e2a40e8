#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lorhol {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed user input: expression text, spec files, CLI arguments.
class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& message, std::size_t position)
      : InputError(message + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

// An expression was evaluated outside its real domain (division by zero,
// log of a nonpositive value, ...). `subexpression` is the offending node.
class DomainError : public Error {
 public:
  DomainError(const std::string& message, std::string subexpression)
      : Error(message + " in '" + subexpression + "'"),
        subexpression_(std::move(subexpression)) {}

  const std::string& subexpression() const noexcept { return subexpression_; }

 private:
  std::string subexpression_;
};

// Point outside the chart domain, or a curve leaving it.
class OutsideDomain : public Error {
 public:
  using Error::Error;
};

// Metric too close to degenerate (condition number above threshold).
class SingularMetric : public Error {
 public:
  using Error::Error;
};

// A precondition on geometric data failed (vector not unit timelike, slice not
// totally geodesic, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace lorhol
