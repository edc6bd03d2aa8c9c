#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vidsum {

// Error categories. Each maps to a distinct process exit code in the CLI.
enum class ErrorKind {
  contract,     // precondition violated by the caller
  validation,   // malformed or out-of-range input data
  dimension,    // shape / length mismatch
  decode,       // media could not be read
  backend,      // a pluggable model backend failed
  numeric,      // NaN / inf / divergence
  dependency,   // upstream stage artifact missing
  stale_cache,  // cached stage computed under a different config
  persistence,  // filesystem IO failure
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::contract: return "contract";
    case ErrorKind::validation: return "validation";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::decode: return "decode";
    case ErrorKind::backend: return "backend";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::dependency: return "dependency";
    case ErrorKind::stale_cache: return "stale-cache";
    case ErrorKind::persistence: return "persistence";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what) : Error(ErrorKind::contract, what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(ErrorKind::dimension, what) {}
};

class DecodeError : public Error {
 public:
  explicit DecodeError(const std::string& what) : Error(ErrorKind::decode, what) {}
};

class BackendError : public Error {
 public:
  explicit BackendError(const std::string& what) : Error(ErrorKind::backend, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

class DependencyError : public Error {
 public:
  DependencyError(const std::string& missing_stage, const std::string& what)
      : Error(ErrorKind::dependency, what), missing_stage_(missing_stage) {}

  const std::string& missing_stage() const noexcept { return missing_stage_; }

 private:
  std::string missing_stage_;
};

class StaleCacheError : public Error {
 public:
  explicit StaleCacheError(const std::string& what) : Error(ErrorKind::stale_cache, what) {}
};

class PersistenceError : public Error {
 public:
  PersistenceError(const std::string& path, const std::string& what)
      : Error(ErrorKind::persistence, what + " [" + path + "]"), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

inline void require(bool condition, const std::string& what) {
  if (!condition) throw ContractError(what);
}

}  // namespace vidsum
