#pragma once

#include <stdexcept>
#include <string>

namespace abfield {

/// Base class for every error raised by the library.  `kind()` is a short
/// machine-readable tag used in CLI error records.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Invalid geometry, path, or potential description.
class GeometryError : public Error {
 public:
  explicit GeometryError(const std::string& message) : Error("geometry", message) {}
};

/// Configuration that violates a documented invariant.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("config", message) {}
};

/// Non-finite values, divergence, or a numerical procedure that failed.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& message) : Error("numerical", message) {}
};

}  // namespace abfield
