#pragma once

#include <stdexcept>
#include <string>

namespace qfsl {

/// Failure classes. The CLI maps each one to a fixed exit code.
enum class ErrorKind {
  Config,     // bad flags, shapes or hyperparameters (exit 1)
  Data,       // malformed or inconsistent input files (exit 2)
  Numerical,  // training produced a non-finite loss (exit 3)
};

/// Distinguishes data failures so callers and tests can tell them apart.
enum class DataIssue {
  Malformed,
  VersionMismatch,
  Truncated,
  DimensionMismatch,
  UnknownClass,
  DuplicateId,
  MissingSplit,
  ZeroNormAttribute,
  ClassCoverage,
  Empty,
};

const char* to_string(DataIssue issue);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class DataError : public Error {
 public:
  DataError(DataIssue issue, const std::string& what)
      : Error(ErrorKind::Data, std::string(to_string(issue)) + ": " + what), issue_(issue) {}
  DataIssue issue() const { return issue_; }

 private:
  DataIssue issue_;
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

}  // namespace qfsl
