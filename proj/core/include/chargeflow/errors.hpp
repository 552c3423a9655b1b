#pragma once

#include <stdexcept>
#include <string>

namespace chargeflow {

enum class ErrorCode {
  DimensionMismatch,
  OffManifold,
  SingularDiagonal,
  NegativeCoefficient,
  NonFiniteSample,
  GridTooCoarse,
  UnsupportedDimension,
  EvenDimension,
  TooCloseToOrigin,
  QuadratureNotConverged,
  NonDifferentiablePoint,
  FixedParticle,
  CollisionSingularity,
  EigenSolveFailure,
  InitializationFailed,
  TooCloseToSingularity,
  DegenerateCluster,
  NotACriticalPoint,
  DivergedLoss,
  InvalidArgument,
  IoError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, long index = -1);

  ErrorCode code() const noexcept { return code_; }
  // offending element for NegativeCoefficient and similar, -1 otherwise
  long index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  long index_;
};

}  // namespace chargeflow
