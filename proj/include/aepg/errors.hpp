#pragma once

#include <stdexcept>
#include <string>

namespace aepg {

// Error hierarchy shared by all modules. The CLI maps these onto process
// exit codes (config -> 2, numeric abort -> 3).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Operands of incompatible length/shape.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(what) {}
};

// Value outside the operation's domain (division by zero entry,
// non-positive weight, empty minibatch, ...).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(what) {}
};

// Requested metric has no supported closed form (Stiefel with
// non-uniform weights).
class UnsupportedMetricError : public Error {
 public:
  explicit UnsupportedMetricError(const std::string& what) : Error(what) {}
};

// Malformed input file; carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line = -1)
      : Error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// A run produced a non-finite value; carries a human-readable dump of the
// optimizer state at the failing iteration.
class NumericAbort : public Error {
 public:
  NumericAbort(const std::string& what, std::string state_dump)
      : Error(what), state_dump_(std::move(state_dump)) {}
  const std::string& state_dump() const { return state_dump_; }

 private:
  std::string state_dump_;
};

// Audit requested but no state log was retained.
class AuditUnavailable : public Error {
 public:
  explicit AuditUnavailable(const std::string& what) : Error(what) {}
};

}  // namespace aepg
