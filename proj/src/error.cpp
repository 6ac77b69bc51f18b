#include "nrtrack/error.hpp"

namespace nrtrack {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::DegenerateMesh: return "DegenerateMesh";
    case ErrorCode::OutsideMesh: return "OutsideMesh";
    case ErrorCode::SingularTriangle: return "SingularTriangle";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::NoForeground: return "NoForeground";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

}  // namespace nrtrack
