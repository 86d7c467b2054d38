#pragma once

#include <stdexcept>
#include <string>

namespace lfin {

class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  /// Short machine-readable category ("shape", "parameter", "crc", ...).
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& w) : Error("shape", w) {}
};

struct ParameterError : Error {
  explicit ParameterError(const std::string& w) : Error("parameter", w) {}
};

struct RangeError : Error {
  explicit RangeError(const std::string& w) : Error("range", w) {}
};

struct StateError : Error {
  explicit StateError(const std::string& w) : Error("state", w) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("config", w) {}
};

struct LoadError : Error {
  explicit LoadError(const std::string& w) : Error("load", w) {}
};

/// Weight-file decoding failures. kind() is one of
/// "magic", "version", "crc", "truncated", "format".
struct FormatError : Error {
  FormatError(std::string kind, const std::string& w) : Error(std::move(kind), w) {}
};

}  // namespace lfin
