#include "sensespace/error.hpp"

namespace sensespace {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::MagicMismatch: return "MagicMismatch";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::CorruptPayload: return "CorruptPayload";
    case ErrorCode::NonFiniteEntry: return "NonFiniteEntry";
    case ErrorCode::IndexOutOfBounds: return "IndexOutOfBounds";
    case ErrorCode::PromptNotFound: return "PromptNotFound";
    case ErrorCode::TokenMismatch: return "TokenMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyBundle: return "EmptyBundle";
    case ErrorCode::WeightsInvalid: return "WeightsInvalid";
    case ErrorCode::TooFewSentences: return "TooFewSentences";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidFormat: return "InvalidFormat";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::NonBinaryOutcome: return "NonBinaryOutcome";
    case ErrorCode::ZeroTotal: return "ZeroTotal";
    case ErrorCode::MissingFixture: return "MissingFixture";
    case ErrorCode::UsageError: return "UsageError";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::NearParallel: return "NearParallel";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::CollapsedDirection: return "CollapsedDirection";
    case ErrorCode::NonPositiveScale: return "NonPositiveScale";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ZeroVector:
    case ErrorCode::NearParallel:
    case ErrorCode::NotSymmetric:
    case ErrorCode::NumericalFailure:
    case ErrorCode::CollapsedDirection:
    case ErrorCode::NonPositiveScale:
      return true;
    default:
      return false;
  }
}

}  // namespace sensespace
