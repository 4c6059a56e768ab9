#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pitchfork {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed problem file or expression; `column` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : Error(format(message, line, column)), line_(line), column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  static std::string format(const std::string& message, std::size_t line,
                            std::size_t column) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (column > 0) out += "column " + std::to_string(column) + ": ";
    return out + message;
  }

  std::size_t line_;
  std::size_t column_;
};

/// A field could not be evaluated at a point (domain error, overflow).
class EvalError : public Error {
 public:
  using Error::Error;
};

/// The expression is not differentiable (or not even defined) at the point,
/// e.g. a 1/x subtree at x = 0. Callers may retry with finite differences.
class SingularPointError : public EvalError {
 public:
  using EvalError::EvalError;
};

/// Linear algebra or iteration failure.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace pitchfork
