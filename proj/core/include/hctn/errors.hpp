#pragma once

#include <stdexcept>
#include <string>

namespace hctn {

/// Incompatible operand shapes, malformed dimensions.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

/// NaN/Inf produced by a kernel, divergent training step.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid hyperparameter or option combination.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Bad input data: out-of-range index, empty required set, dim mismatch
/// between file and declared bounds.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Unparseable input line; carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace hctn
