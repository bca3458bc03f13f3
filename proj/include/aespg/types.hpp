#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aespg {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when a caller-supplied parameter violates its documented range.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iteration produces non-finite values.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, Vector iterate = {})
      : std::runtime_error(what), iterate_(std::move(iterate)) {}

  /// Packed iterate at the time of failure (may be empty).
  const Vector& iterate() const noexcept { return iterate_; }

 private:
  Vector iterate_;
};

/// Raised by file readers; carries the byte offset where parsing failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace aespg
