#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sensespace {

enum class ErrorCode {
  // input / usage
  FileNotFound,
  MagicMismatch,
  VersionUnsupported,
  CorruptPayload,
  NonFiniteEntry,
  IndexOutOfBounds,
  PromptNotFound,
  TokenMismatch,
  DimensionMismatch,
  ShapeMismatch,
  EmptyInput,
  EmptyBundle,
  WeightsInvalid,
  TooFewSentences,
  InvalidSpec,
  InvalidFormat,
  EmptyGroup,
  NonBinaryOutcome,
  ZeroTotal,
  MissingFixture,
  UsageError,
  // numerical
  ZeroVector,
  NearParallel,
  NotSymmetric,
  NumericalFailure,
  CollapsedDirection,
  NonPositiveScale,
};

std::string_view error_name(ErrorCode code) noexcept;

/// True for codes that signal a numerical failure rather than bad input.
bool is_numerical(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }

private:
  ErrorCode code_;
};

}  // namespace sensespace
