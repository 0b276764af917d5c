#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mmtrace {

enum class ErrorKind {
  InvalidPoint,
  EmptySet,
  ResolutionError,
  InsufficientData,
  InvalidScale,
  MissingMetadata,
  InvalidGrid,
  InvalidParameter,
  ParameterError,
  InvalidPair,
  ZeroMass,
  InvalidFamily,
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// Process exit code used by the CLI for a given error kind
/// (2 parameter, 3 resolution, 4 io, 1 anything else).
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace mmtrace
