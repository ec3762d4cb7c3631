#include "kgrs/error.hpp"

namespace kgrs {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Syntax: return "SyntaxError";
    case ErrorKind::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorKind::Arity: return "ArityError";
    case ErrorKind::Domain: return "DomainError";
    case ErrorKind::SingularMetric: return "SingularMetric";
    case ErrorKind::DegeneratePlane: return "DegeneratePlane";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotCommuting: return "NotCommuting";
    case ErrorKind::DegenerateSubspace: return "DegenerateSubspace";
    case ErrorKind::BadFrame: return "BadFrame";
    case ErrorKind::CrossCheckMismatch: return "CrossCheckMismatch";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::EmptyLevel: return "EmptyLevel";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::Validation: return "ValidationError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Error";
}

}  // namespace kgrs
