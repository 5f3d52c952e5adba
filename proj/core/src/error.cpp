#include "ampi/error.hpp"

namespace ampi {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::SingularHomography: return "SingularHomography";
    case ErrorCode::PointAtInfinity: return "PointAtInfinity";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NonPositiveNear: return "NonPositiveNear";
    case ErrorCode::EmptyGroundTruth: return "EmptyGroundTruth";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::UnknownPreset: return "UnknownPreset";
    case ErrorCode::CameraInsideScene: return "CameraInsideScene";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace ampi
