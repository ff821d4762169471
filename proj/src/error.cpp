#include "visyreve/error.hpp"

namespace visyreve {

ErrorClass classify(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::KTooLarge:
      return ErrorClass::Usage;
    case ErrorCode::BadQuaternion:
    case ErrorCode::EmptyDataset:
    case ErrorCode::EmptyInput:
    case ErrorCode::ParseError:
    case ErrorCode::MissingMesh:
    case ErrorCode::NoValidSource:
    case ErrorCode::KeypointOutOfView:
    case ErrorCode::CountMismatch:
    case ErrorCode::SchemaError:
    case ErrorCode::IdCollision:
    case ErrorCode::InsufficientPairs:
    case ErrorCode::TooFewSamples:
      return ErrorClass::Data;
    case ErrorCode::PointBehindCamera:
    case ErrorCode::NonPositiveDepth:
    case ErrorCode::DegenerateIntrinsics:
    case ErrorCode::RejectionBudgetExhausted:
    case ErrorCode::SingularHomography:
    case ErrorCode::ZeroRange:
    case ErrorCode::EmptyOverlap:
    case ErrorCode::EmptyMask:
    case ErrorCode::DegenerateVariance:
    case ErrorCode::TargetUnreachable:
    case ErrorCode::MaxIterationsExceeded:
      return ErrorClass::Numerical;
    case ErrorCode::MissingFile:
    case ErrorCode::IoError:
      return ErrorClass::Io;
  }
  return ErrorClass::Data;
}

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::PointBehindCamera: return "PointBehindCamera";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::BadQuaternion: return "BadQuaternion";
    case ErrorCode::DegenerateIntrinsics: return "DegenerateIntrinsics";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::RejectionBudgetExhausted: return "RejectionBudgetExhausted";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SingularHomography: return "SingularHomography";
    case ErrorCode::ZeroRange: return "ZeroRange";
    case ErrorCode::MissingMesh: return "MissingMesh";
    case ErrorCode::EmptyOverlap: return "EmptyOverlap";
    case ErrorCode::NoValidSource: return "NoValidSource";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::KeypointOutOfView: return "KeypointOutOfView";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::IdCollision: return "IdCollision";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InsufficientPairs: return "InsufficientPairs";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::TargetUnreachable: return "TargetUnreachable";
    case ErrorCode::MaxIterationsExceeded: return "MaxIterationsExceeded";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace visyreve
