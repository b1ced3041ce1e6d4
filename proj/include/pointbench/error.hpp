#pragma once

#include <stdexcept>
#include <string>

namespace pointbench {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateVector : public Error {
 public:
  using Error::Error;
};

class SeriesTooShort : public Error {
 public:
  using Error::Error;
};

/// BVH syntax or arity problem. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class UnsupportedChannel : public ParseError {
 public:
  using ParseError::ParseError;
};

/// Clip/config JSON that does not match the schema. `field()` names the offender.
class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& field, const std::string& detail = "")
      : Error(detail.empty() ? "schema error: " + field
                             : "schema error: " + field + ": " + detail),
        field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class NoMovementFound : public Error {
 public:
  using Error::Error;
};

class Unreachable : public Error {
 public:
  using Error::Error;
};

class TargetOutOfRange : public Error {
 public:
  using Error::Error;
};

class SteppedAfterDone : public Error {
 public:
  using Error::Error;
};

class SkeletonMismatch : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class NonFiniteLoss : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class IncompatibleCheckpoint : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value (validation failure).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace pointbench
