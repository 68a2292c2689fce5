#pragma once

#include <stdexcept>
#include <string>

namespace blockreach {

enum class ErrorKind {
  Unbounded,
  EmptySet,
  NumericalFailure,
  DimensionMismatch,
  MissingBlock,
  StructureMismatch,
  ConfigError,
  ParseError,
  IOError,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` tells callers which
/// contract was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Unbounded: return "Unbounded";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::MissingBlock: return "MissingBlock";
    case ErrorKind::StructureMismatch: return "StructureMismatch";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IOError: return "IOError";
  }
  return "Unknown";
}

}  // namespace blockreach
