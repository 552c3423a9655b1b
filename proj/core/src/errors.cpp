#include "chargeflow/errors.hpp"

namespace chargeflow {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::OffManifold: return "OffManifold";
    case ErrorCode::SingularDiagonal: return "SingularDiagonal";
    case ErrorCode::NegativeCoefficient: return "NegativeCoefficient";
    case ErrorCode::NonFiniteSample: return "NonFiniteSample";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::EvenDimension: return "EvenDimension";
    case ErrorCode::TooCloseToOrigin: return "TooCloseToOrigin";
    case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorCode::NonDifferentiablePoint: return "NonDifferentiablePoint";
    case ErrorCode::FixedParticle: return "FixedParticle";
    case ErrorCode::CollisionSingularity: return "CollisionSingularity";
    case ErrorCode::EigenSolveFailure: return "EigenSolveFailure";
    case ErrorCode::InitializationFailed: return "InitializationFailed";
    case ErrorCode::TooCloseToSingularity: return "TooCloseToSingularity";
    case ErrorCode::DegenerateCluster: return "DegenerateCluster";
    case ErrorCode::NotACriticalPoint: return "NotACriticalPoint";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what, long index)
    : std::runtime_error(std::string(to_string(code)) + ": " + what),
      code_(code),
      index_(index) {}

}  // namespace chargeflow
