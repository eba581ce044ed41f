#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace faraway {

enum class ErrorCode {
  // kitti_io
  MissingCalibKey,
  MalformedCalibLine,
  TruncatedPointcloud,
  NonFinitePoint,
  MalformedDetectionLine,
  BadScore,
  BadBBox,
  MaskDimMismatch,
  BadPgm,
  MalformedLabelLine,
  NonFiniteBox,
  // geometry
  FrameMismatch,
  BadCalibration,
  // clustering
  EmptyCluster,
  // regressor
  UnknownClass,
  ShapeError,
  EmptyDataset,
  BadCheckpoint,
  // pipeline
  MissingFrameData,
  ConfigError,
  // eval
  ZeroAreaBox,
  // generic filesystem failure
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace faraway
