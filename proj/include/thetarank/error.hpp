#pragma once

#include <stdexcept>
#include <string>

namespace thetarank {

// Numeric values are shared with the C API status codes and the CLI exit
// statuses.
enum class ErrorCode : int {
  kIo = 1,
  kParse = 2,
  kSchema = 3,
  kUnsupported = 4,
  kGuard = 5,
  kInvalidArgument = 6,
  kInternal = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what)
      : Error(ErrorCode::kSchema, what) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what)
      : Error(ErrorCode::kParse, what) {}
};

class UnsupportedError : public Error {
 public:
  explicit UnsupportedError(const std::string& what)
      : Error(ErrorCode::kUnsupported, what) {}
};

class GuardExceeded : public Error {
 public:
  explicit GuardExceeded(const std::string& what)
      : Error(ErrorCode::kGuard, what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorCode::kInvalidArgument, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::kIo, what) {}
};

}  // namespace thetarank
