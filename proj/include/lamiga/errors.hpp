#pragma once

#include <stdexcept>
#include <string>

namespace lamiga {

/// Base class of every error raised by the library. `kind()` is a short
/// machine-readable tag used by the CLI error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error("domain", w) {}
};
struct GeometryError : Error {
  explicit GeometryError(const std::string& w) : Error("geometry", w) {}
};
struct MaterialError : Error {
  explicit MaterialError(const std::string& w) : Error("material", w) {}
};
struct UnsupportedError : Error {
  explicit UnsupportedError(const std::string& w) : Error("unsupported", w) {}
};
struct SolverError : Error {
  explicit SolverError(const std::string& w) : Error("solver", w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("config", w) {}
};

}  // namespace lamiga
