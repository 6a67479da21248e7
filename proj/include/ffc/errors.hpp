#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ffc {

/// Shape or argument mismatch at an API boundary.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation requested for a dimension or mode it does not handle.
class Unsupported : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation of a rational field on one of its singular axes.
class SingularEvaluation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numeric stage produced no usable result (degenerate field, empty data).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No control value satisfies the requested transition.
class PlanningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. Row and column are 1-based; 0 means "not applicable".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t row = 0, std::size_t column = 0)
      : std::runtime_error(what + (row ? " (row " + std::to_string(row) + ", column " +
                                             std::to_string(column) + ")"
                                       : std::string{})),
        row_(row),
        column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

}  // namespace ffc
