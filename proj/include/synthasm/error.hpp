#pragma once

#include <stdexcept>
#include <string>

namespace synthasm {

/// Failure class of an error; the CLI maps each kind onto its exit code.
enum class ErrorKind {
  Validation = 1,  // bad config, bad arguments, violated preconditions
  Io = 2,          // file missing, unreadable or unwritable
  Data = 3,        // malformed or inconsistent input data
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message) : Error(ErrorKind::Validation, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorKind::Io, message) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& message) : Error(ErrorKind::Data, message) {}
};

int exit_code(ErrorKind kind) noexcept;

}  // namespace synthasm
