#pragma once

#include <stdexcept>
#include <string>

namespace uescore {

/// Base error for all runtime failures in this library (exit code 1 at the CLI).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad user input: unknown names, malformed arguments (exit code 2 at the CLI).
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(what) {}
};

/// Failure reported by an external oracle (entailment service, similarity plugin).
class OracleError : public Error {
 public:
  explicit OracleError(const std::string& what) : Error(what) {}
};

}  // namespace uescore
