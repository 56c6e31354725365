// SPDX-License-Identifier: Apache-2.0

#include "prbench/error.hpp"

namespace prbench {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidParam: return "InvalidParam";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidBounds: return "InvalidBounds";
    case ErrorCode::NonPositiveOutput: return "NonPositiveOutput";
    case ErrorCode::BackendFailure: return "BackendFailure";
    case ErrorCode::UnsupportedSubject: return "UnsupportedSubject";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::CorruptStore: return "CorruptStore";
    case ErrorCode::EmptyRange: return "EmptyRange";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::NoPeaks: return "NoPeaks";
    case ErrorCode::NonUniformSteps: return "NonUniformSteps";
    case ErrorCode::MappingMismatch: return "MappingMismatch";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::LatticeTooSmall: return "LatticeTooSmall";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::EncodingVersionMismatch: return "EncodingVersionMismatch";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptModel: return "CorruptModel";
    case ErrorCode::MissingEstimator: return "MissingEstimator";
    case ErrorCode::MissingFusingWeights: return "MissingFusingWeights";
    case ErrorCode::SingularFit: return "SingularFit";
    case ErrorCode::InvalidBlock: return "InvalidBlock";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonPositiveMeasured: return "NonPositiveMeasured";
    case ErrorCode::TestTrainOverlap: return "TestTrainOverlap";
  }
  return "Unknown";
}

}  // namespace prbench
