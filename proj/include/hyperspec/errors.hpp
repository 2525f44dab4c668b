#pragma once

#include <stdexcept>
#include <string>

namespace hyperspec {

enum class ErrorKind {
  domain,
  resource,
  convergence,
  parse,
  io,
  config,
  internal,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct DomainError : Error {
  explicit DomainError(const std::string& m) : Error(ErrorKind::domain, m) {}
};

// Raised when a request would exceed a configured size budget.
struct ResourceError : Error {
  explicit ResourceError(const std::string& m) : Error(ErrorKind::resource, m) {}
};

struct ConvergenceError : Error {
  explicit ConvergenceError(const std::string& m) : Error(ErrorKind::convergence, m) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& m) : Error(ErrorKind::parse, m) {}
};

struct IoError : Error {
  explicit IoError(const std::string& m) : Error(ErrorKind::io, m) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error(ErrorKind::config, m) {}
};

struct InternalError : Error {
  explicit InternalError(const std::string& m) : Error(ErrorKind::internal, m) {}
};

}  // namespace hyperspec
