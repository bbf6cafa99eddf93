#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bscan {

// Base of every error the library raises. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyInput : public Error {
 public:
  EmptyInput() : Error("input contains no data rows") {}
};

class ParseError : public Error {
 public:
  ParseError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}

  // 1-based line number in the source, header is row 1.
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

// Invalid argument to an operation (bad level, bad parameters, out of support).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// All labels equal: the permutation distribution is a point mass.
class DegenerateLabels : public Error {
 public:
  DegenerateLabels() : Error("all labels are identical; no permutation test is possible") {}
};

class InvalidSide : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InvalidAlternative : public ValidationError {
 public:
  InvalidAlternative() : ValidationError("detection boundary requires q < p") {}
};

class EmptyBlockRange : public Error {
 public:
  explicit EmptyBlockRange(std::size_t n)
      : Error("no scan blocks for N = " + std::to_string(n) + " points") {}
};

class BlockMismatch : public Error {
 public:
  BlockMismatch() : Error("calibration block range does not match the dataset") {}
};

class TooLarge : public ValidationError {
 public:
  TooLarge(std::size_t n, std::size_t limit)
      : ValidationError("brute force limited to N <= " + std::to_string(limit) +
                        ", got " + std::to_string(n)) {}
};

// Raised by the approximation oracle when no enumerated rectangle fits inside the query.
class NoContainedRect : public Error {
 public:
  NoContainedRect() : Error("no enumerated rectangle is contained in the query rectangle") {}
};

// Internal consistency check failed.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace bscan
