#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace donorline {

/// Every failure the library reports carries one of these codes. The CLI maps
/// them onto process exit codes (see exit_code()).
enum class ErrorCode {
  IncompatibleUnits,
  UnknownDonor,
  CutoffTooLarge,
  NoMinimumInBracket,
  EnvironmentMismatch,
  FitDiverged,
  DegenerateData,
  InsufficientData,
  InsufficientWingData,
  CorrectionSingular,
  InconsistentWidths,
  NonPhysicalTransmission,
  IncompleteCoverage,
  EnvironmentTooSmall,
  ParseError,
  UnitError,
  ConfigError,
  MissingSeries,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::IncompatibleUnits: return "IncompatibleUnits";
    case ErrorCode::UnknownDonor: return "UnknownDonor";
    case ErrorCode::CutoffTooLarge: return "CutoffTooLarge";
    case ErrorCode::NoMinimumInBracket: return "NoMinimumInBracket";
    case ErrorCode::EnvironmentMismatch: return "EnvironmentMismatch";
    case ErrorCode::FitDiverged: return "FitDiverged";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::InsufficientWingData: return "InsufficientWingData";
    case ErrorCode::CorrectionSingular: return "CorrectionSingular";
    case ErrorCode::InconsistentWidths: return "InconsistentWidths";
    case ErrorCode::NonPhysicalTransmission: return "NonPhysicalTransmission";
    case ErrorCode::IncompleteCoverage: return "IncompleteCoverage";
    case ErrorCode::EnvironmentTooSmall: return "EnvironmentTooSmall";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnitError: return "UnitError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingSeries: return "MissingSeries";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// 0 success, 2 input error, 3 fit failure, 4 config error, 1 anything else.
constexpr int exit_code(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::UnitError:
    case ErrorCode::NonPhysicalTransmission:
    case ErrorCode::IncompleteCoverage:
    case ErrorCode::DegenerateData:
    case ErrorCode::MissingSeries:
    case ErrorCode::InconsistentWidths:
    case ErrorCode::CorrectionSingular:
      return 2;
    case ErrorCode::FitDiverged:
    case ErrorCode::InsufficientData:
    case ErrorCode::InsufficientWingData:
    case ErrorCode::NoMinimumInBracket:
      return 3;
    case ErrorCode::ConfigError:
    case ErrorCode::UnknownDonor:
    case ErrorCode::IncompatibleUnits:
    case ErrorCode::InvalidArgument:
    case ErrorCode::CutoffTooLarge:
    case ErrorCode::EnvironmentTooSmall:
      return 4;
    default:
      return 1;
  }
}

}  // namespace donorline
