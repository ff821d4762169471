#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace visyreve {

enum class ErrorCode {
  // geometry
  PointBehindCamera,
  NonPositiveDepth,
  BadQuaternion,
  DegenerateIntrinsics,
  // nnindex
  EmptyDataset,
  KTooLarge,
  // density
  EmptyInput,
  RejectionBudgetExhausted,
  // meshrender
  ParseError,
  // synthesis
  SingularHomography,
  ZeroRange,
  MissingMesh,
  EmptyOverlap,
  NoValidSource,
  // quality
  EmptyMask,
  KeypointOutOfView,
  CountMismatch,
  // dataset
  SchemaError,
  MissingFile,
  IdCollision,
  IoError,
  // campaign
  InsufficientPairs,
  TooFewSamples,
  DegenerateVariance,
  TargetUnreachable,
  MaxIterationsExceeded,
  // generic precondition violation
  InvalidArgument,
};

/// Coarse error classes; the numeric values are the CLI exit codes.
enum class ErrorClass : int { Usage = 2, Data = 3, Numerical = 4, Io = 5 };

ErrorClass classify(ErrorCode code) noexcept;
std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  ErrorClass error_class() const noexcept { return classify(code_); }
  int exit_code() const noexcept { return static_cast<int>(error_class()); }

 private:
  ErrorCode code_;
};

}  // namespace visyreve
