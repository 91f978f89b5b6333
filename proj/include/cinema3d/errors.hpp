#pragma once

#include <stdexcept>
#include <string>

namespace cinema3d {

enum class ErrorKind { config, asset, render };

/// Base error for the engine. The kind selects the CLI exit code and the
/// HTTP status family in the service.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error(ErrorKind::config, message) {}
};

class AssetError : public Error {
 public:
  explicit AssetError(const std::string& message)
      : Error(ErrorKind::asset, message) {}
};

class RenderError : public Error {
 public:
  explicit RenderError(const std::string& message)
      : Error(ErrorKind::render, message) {}
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
      return 2;
    case ErrorKind::asset:
      return 3;
    case ErrorKind::render:
      return 4;
  }
  return 1;
}

}  // namespace cinema3d
