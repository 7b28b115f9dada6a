#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sparse_bandit {

enum class ErrorCode {
  kScheduleTooShort,
  kInvalidAction,
  kInvalidDecay,
  kEffDimOverflow,
  kInvalidParameter,
  kInvalidFeatureIndex,
  kUnsupportedModel,
  kIndexOutOfRange,
  kInstanceTooSmall,
  kBadActionSequence,
  kBetaOutOfRange,
  kPackingFailed,
  kGridTooLarge,
  kSupportMismatch,
  kConfigError,
  kFitUndefined,
  kEmptyData,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kScheduleTooShort: return "ScheduleTooShort";
    case ErrorCode::kInvalidAction: return "InvalidAction";
    case ErrorCode::kInvalidDecay: return "InvalidDecay";
    case ErrorCode::kEffDimOverflow: return "EffDimOverflow";
    case ErrorCode::kInvalidParameter: return "InvalidParameter";
    case ErrorCode::kInvalidFeatureIndex: return "InvalidFeatureIndex";
    case ErrorCode::kUnsupportedModel: return "UnsupportedModel";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kInstanceTooSmall: return "InstanceTooSmall";
    case ErrorCode::kBadActionSequence: return "BadActionSequence";
    case ErrorCode::kBetaOutOfRange: return "BetaOutOfRange";
    case ErrorCode::kPackingFailed: return "PackingFailed";
    case ErrorCode::kGridTooLarge: return "GridTooLarge";
    case ErrorCode::kSupportMismatch: return "SupportMismatch";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kFitUndefined: return "FitUndefined";
    case ErrorCode::kEmptyData: return "EmptyData";
  }
  return "Unknown";
}

// All library failures are reported through this exception; `code()` is the
// machine-readable kind, `what()` a human-readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sparse_bandit
