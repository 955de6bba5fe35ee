#pragma once

#include <stdexcept>
#include <string>

namespace geomark {

/// Input outside the mathematical domain of an operation (bad coordinates,
/// duplicate points, nonpositive intensity, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Inconsistent or unsupported configuration. The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Two points of a pattern fall into the same raster pixel.
class CollisionError : public std::runtime_error {
 public:
  CollisionError(const std::string& what, int row, int col)
      : std::runtime_error(what), row_(row), col_(col) {}
  int row() const noexcept { return row_; }
  int col() const noexcept { return col_; }

 private:
  int row_;
  int col_;
};

/// Non-finite values or a failed solve. The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace geomark
