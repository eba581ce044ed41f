#include "faraway/error.hpp"

namespace faraway {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingCalibKey: return "MissingCalibKey";
    case ErrorCode::MalformedCalibLine: return "MalformedCalibLine";
    case ErrorCode::TruncatedPointcloud: return "TruncatedPointcloud";
    case ErrorCode::NonFinitePoint: return "NonFinitePoint";
    case ErrorCode::MalformedDetectionLine: return "MalformedDetectionLine";
    case ErrorCode::BadScore: return "BadScore";
    case ErrorCode::BadBBox: return "BadBBox";
    case ErrorCode::MaskDimMismatch: return "MaskDimMismatch";
    case ErrorCode::BadPgm: return "BadPgm";
    case ErrorCode::MalformedLabelLine: return "MalformedLabelLine";
    case ErrorCode::NonFiniteBox: return "NonFiniteBox";
    case ErrorCode::FrameMismatch: return "FrameMismatch";
    case ErrorCode::BadCalibration: return "BadCalibration";
    case ErrorCode::EmptyCluster: return "EmptyCluster";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::BadCheckpoint: return "BadCheckpoint";
    case ErrorCode::MissingFrameData: return "MissingFrameData";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ZeroAreaBox: return "ZeroAreaBox";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

}  // namespace faraway
