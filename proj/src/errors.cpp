#include "mmtrace/errors.hpp"

namespace mmtrace {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidPoint: return "InvalidPoint";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::ResolutionError: return "ResolutionError";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::InvalidScale: return "InvalidScale";
    case ErrorKind::MissingMetadata: return "MissingMetadata";
    case ErrorKind::InvalidGrid: return "InvalidGrid";
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::ParameterError: return "ParameterError";
    case ErrorKind::InvalidPair: return "InvalidPair";
    case ErrorKind::ZeroMass: return "ZeroMass";
    case ErrorKind::InvalidFamily: return "InvalidFamily";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameter:
    case ErrorKind::ParameterError:
    case ErrorKind::InvalidScale:
    case ErrorKind::InvalidGrid:
    case ErrorKind::InvalidPoint:
    case ErrorKind::InvalidPair:
    case ErrorKind::InvalidFamily:
    case ErrorKind::EmptySet:
    case ErrorKind::MissingMetadata:
      return 2;
    case ErrorKind::ResolutionError:
    case ErrorKind::InsufficientData:
      return 3;
    case ErrorKind::IoError:
      return 4;
    case ErrorKind::ZeroMass:
      return 1;
  }
  return 1;
}

}  // namespace mmtrace
