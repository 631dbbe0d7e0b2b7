#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nvmag {

enum class ErrorCode {
  InvalidArgument,
  InvalidOptics,
  QuadratureNotConverged,
  NonUnitVector,
  ObjectiveNotFinite,
  DegenerateTemplate,
  NoConvergence,
  InconsistentFrequencies,
  DegenerateField,
  FitFailed,
  TripletsOverlap,
  DegenerateAxes,
  NoSolution,
  NoIntersection,
  ParseError,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Numerical failures are distinguished from bad input and IO at the CLI boundary.
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidOptics: return "InvalidOptics";
    case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorCode::NonUnitVector: return "NonUnitVector";
    case ErrorCode::ObjectiveNotFinite: return "ObjectiveNotFinite";
    case ErrorCode::DegenerateTemplate: return "DegenerateTemplate";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::InconsistentFrequencies: return "InconsistentFrequencies";
    case ErrorCode::DegenerateField: return "DegenerateField";
    case ErrorCode::FitFailed: return "FitFailed";
    case ErrorCode::TripletsOverlap: return "TripletsOverlap";
    case ErrorCode::DegenerateAxes: return "DegenerateAxes";
    case ErrorCode::NoSolution: return "NoSolution";
    case ErrorCode::NoIntersection: return "NoIntersection";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

inline bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::QuadratureNotConverged:
    case ErrorCode::ObjectiveNotFinite:
    case ErrorCode::DegenerateTemplate:
    case ErrorCode::NoConvergence:
    case ErrorCode::InconsistentFrequencies:
    case ErrorCode::DegenerateField:
    case ErrorCode::FitFailed:
    case ErrorCode::TripletsOverlap:
    case ErrorCode::DegenerateAxes:
    case ErrorCode::NoSolution:
    case ErrorCode::NoIntersection:
      return true;
    default:
      return false;
  }
}

}  // namespace nvmag
