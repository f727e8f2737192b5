#pragma once

#include <stdexcept>
#include <string>

namespace cycleuq {

// Failure categories. They map one-to-one onto the C status codes and the
// CLI exit codes (usage 1, data 2, numerical 3).
enum class ErrorKind { Usage, Data, Numerical, Io };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

// Raised when an image would be built from NaN/Inf samples.
class NonFiniteError : public DataError {
 public:
  NonFiniteError() : DataError("non-finite input") {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::Numerical, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

}  // namespace cycleuq
