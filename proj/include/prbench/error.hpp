// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace prbench {

/// Every failure raised by the library carries one of these codes. The CLI
/// prints the code name verbatim, so renaming an enumerator is a breaking
/// change for scripts that match on it.
enum class ErrorCode {
  InvalidParam,
  InvalidArgument,
  InvalidBounds,
  NonPositiveOutput,
  BackendFailure,
  UnsupportedSubject,
  IoFailure,
  CorruptStore,
  EmptyRange,
  DegenerateInput,
  NoPeaks,
  NonUniformSteps,
  MappingMismatch,
  KindMismatch,
  LatticeTooSmall,
  InsufficientData,
  EncodingVersionMismatch,
  VersionMismatch,
  CorruptModel,
  MissingEstimator,
  MissingFusingWeights,
  SingularFit,
  InvalidBlock,
  ParseError,
  CycleDetected,
  ShapeMismatch,
  Unreachable,
  LengthMismatch,
  NonPositiveMeasured,
  TestTrainOverlap,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_code_name(code_); }
  /// Message without the leading code name.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace prbench
