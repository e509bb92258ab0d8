#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adlsense {

enum class ErrorCode {
  MalformedLine,
  UnknownKind,
  BadValue,
  BadTimestamp,
  Io,
  RuleConflict,
  InvalidRule,
  UnknownSensor,
  SchemaMismatch,
  Validation,
  DegenerateRange,
  DuplicateCaseId,
  ConfigIncomplete,
  EmptySeries,
  InvalidScenario,
  Config,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::BadValue: return "BadValue";
    case ErrorCode::BadTimestamp: return "BadTimestamp";
    case ErrorCode::Io: return "Io";
    case ErrorCode::RuleConflict: return "RuleConflict";
    case ErrorCode::InvalidRule: return "InvalidRule";
    case ErrorCode::UnknownSensor: return "UnknownSensor";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::Validation: return "Validation";
    case ErrorCode::DegenerateRange: return "DegenerateRange";
    case ErrorCode::DuplicateCaseId: return "DuplicateCaseId";
    case ErrorCode::ConfigIncomplete: return "ConfigIncomplete";
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

/// Every failure raised by the library. The code is stable and meant for
/// programmatic handling; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace adlsense
