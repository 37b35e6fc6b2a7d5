#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gtforge {

enum class ErrorCode {
  InvalidArgument,
  NoData,
  InsufficientData,
  UnorderedTimestamps,
  MissingInput,
  ZeroSegments,
  NoAssociation,
  Io,
  Parse,
  NoOverlap,
  SingularSystem,
  DegenerateAlignment,
  LocalizationLost,
};

/// Coarse grouping used for process exit codes.
enum class ErrorClass { Usage, Data, Numerical };

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::NoData: return "no_data";
    case ErrorCode::InsufficientData: return "insufficient_data";
    case ErrorCode::UnorderedTimestamps: return "unordered_timestamps";
    case ErrorCode::MissingInput: return "missing_input";
    case ErrorCode::ZeroSegments: return "zero_segments";
    case ErrorCode::NoAssociation: return "no_association";
    case ErrorCode::Io: return "io";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::NoOverlap: return "no_overlap";
    case ErrorCode::SingularSystem: return "singular_system";
    case ErrorCode::DegenerateAlignment: return "degenerate_alignment";
    case ErrorCode::LocalizationLost: return "localization_lost";
  }
  return "unknown";
}

constexpr ErrorClass error_class(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
      return ErrorClass::Usage;
    case ErrorCode::NoOverlap:
    case ErrorCode::SingularSystem:
    case ErrorCode::DegenerateAlignment:
    case ErrorCode::LocalizationLost:
      return ErrorClass::Numerical;
    default:
      return ErrorClass::Data;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gtforge
