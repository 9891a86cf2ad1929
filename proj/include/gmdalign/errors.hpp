/**
 * gmdalign
 *
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace gmdalign {

// Exit-code contract: 0 success, 1 compute error, 2 I/O error, 3 validation
// error. Every library error belongs to exactly one class.
enum class ErrorClass : int { Compute = 1, Io = 2, Validation = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, std::string msg)
      : std::runtime_error(std::move(msg)), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }
  int exit_code() const noexcept { return static_cast<int>(cls_); }

 private:
  ErrorClass cls_;
};

class IoError : public Error {
 public:
  explicit IoError(std::string msg) : Error(ErrorClass::Io, std::move(msg)) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::string msg)
      : Error(ErrorClass::Validation, std::move(msg)) {}
};

class ComputeError : public Error {
 public:
  explicit ComputeError(std::string msg)
      : Error(ErrorClass::Compute, std::move(msg)) {}
};

// ---- file / format errors ------------------------------------------------

class BadMagicError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class TruncatedFileError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NonFiniteValueError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : ValidationError(path + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class RowOutOfBoundsError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyDocumentError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DuplicatePairError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class BadHeaderError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// ---- shape / argument errors ----------------------------------------------

class DimensionMismatchError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ZeroVectorError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class MassMismatchError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class TooLargeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class MissingDateError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyGoldError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyTableError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InsufficientPairsError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UsageError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// ---- compute errors --------------------------------------------------------

class DegenerateConstraintsError : public ComputeError {
 public:
  using ComputeError::ComputeError;
};

// Carries the last iterate so callers can inspect how far the solver got.
class NonConvergenceError : public ComputeError {
 public:
  NonConvergenceError(std::string msg, Eigen::MatrixXd last_iterate)
      : ComputeError(std::move(msg)), last_iterate_(std::move(last_iterate)) {}
  const Eigen::MatrixXd& last_iterate() const noexcept { return last_iterate_; }

 private:
  Eigen::MatrixXd last_iterate_;
};

}  // namespace gmdalign
