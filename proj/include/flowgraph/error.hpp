#pragma once

#include <stdexcept>
#include <string>

namespace flowgraph {

/// Coarse error category, used by the CLI to pick an exit code.
enum class ErrorKind { argument, schema, io, data, config, fit, consistency };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ArgumentError : Error {
  explicit ArgumentError(const std::string& what) : Error(ErrorKind::argument, what) {}
};

struct SchemaError : Error {
  explicit SchemaError(const std::string& what) : Error(ErrorKind::schema, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

struct EmptyDatasetError : DataError {
  explicit EmptyDatasetError(const std::string& what) : DataError(what) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

struct ConsistencyError : Error {
  explicit ConsistencyError(const std::string& what) : Error(ErrorKind::consistency, what) {}
};

/// Raised when a detector cannot be fitted. For the OC-SVM solver the final
/// KKT violation is carried along so callers can report it.
class FitError : public Error {
 public:
  explicit FitError(const std::string& what, double gap = 0.0)
      : Error(ErrorKind::fit, what), gap_(gap) {}

  double gap() const noexcept { return gap_; }

 private:
  double gap_;
};

}  // namespace flowgraph
