#pragma once

#include <stdexcept>
#include <string>

namespace nvtherm {

// Invalid physical parameters, malformed configuration, or out-of-range inputs.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An estimator cannot produce a meaningful value from the given data
// (degenerate probe geometry, denominator below the degeneracy floor).
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A nonlinear fit failed to converge within its iteration budget.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Syntax error in a sequence program or scenario file, with source location.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line, int column)
      : std::runtime_error("line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace nvtherm
