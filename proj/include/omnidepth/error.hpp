#pragma once

#include <stdexcept>
#include <string>

namespace omnidepth {

// Failure categories map one-to-one onto CLI exit codes.
enum class ErrorKind {
  kInvalidArgument,  // bad coordinate, bad parameter, violated precondition
  kData,             // missing file, parse error, inconsistent inputs
  kNumerical,        // degenerate geometry, no consensus, ambiguous solution
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorKind::kInvalidArgument, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::kNumerical, what) {}
};

// Specific numerical failures that callers branch on.
class DegenerateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoConsensusError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class AmbiguousDecompositionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace omnidepth
