#pragma once

#include <stdexcept>
#include <string>

namespace lcz {

// Categories map one-to-one onto CLI exit codes.
enum class ErrorKind : int { usage = 1, data = 2, numerical = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& message) : Error(ErrorKind::usage, message) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& message) : Error(ErrorKind::data, message) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& message)
      : Error(ErrorKind::numerical, message) {}
};

}  // namespace lcz
