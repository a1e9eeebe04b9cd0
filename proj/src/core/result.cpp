#include "rfpresence/core/result.hpp"

namespace rfpresence {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
  case ErrorCode::kInvalidArgument: return "InvalidArgument";
  case ErrorCode::kIoError: return "IoError";
  case ErrorCode::kParseError: return "ParseError";
  case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
  case ErrorCode::kShapeMismatch: return "ShapeMismatch";
  case ErrorCode::kWrongFrameCount: return "WrongFrameCount";
  case ErrorCode::kZeroMagnitudeEntry: return "ZeroMagnitudeEntry";
  case ErrorCode::kSpanOutOfTolerance: return "SpanOutOfTolerance";
  case ErrorCode::kNonDivisibleSelection: return "NonDivisibleSelection";
  case ErrorCode::kEmptyScene: return "EmptyScene";
  case ErrorCode::kSpeedLimitExceeded: return "SpeedLimitExceeded";
  case ErrorCode::kDivisionByZeroFrame: return "DivisionByZeroFrame";
  case ErrorCode::kCropLargerThanInput: return "CropLargerThanInput";
  case ErrorCode::kZeroReferenceEntry: return "ZeroReferenceEntry";
  case ErrorCode::kNegativeInput: return "NegativeInput";
  case ErrorCode::kKernelLargerThanInput: return "KernelLargerThanInput";
  case ErrorCode::kPoolLargerThanInput: return "PoolLargerThanInput";
  case ErrorCode::kDegenerateBatch: return "DegenerateBatch";
  case ErrorCode::kNoValidWindows: return "NoValidWindows";
  case ErrorCode::kSingleClassTrainingSet: return "SingleClassTrainingSet";
  case ErrorCode::kVariantMismatch: return "VariantMismatch";
  }
  return "Unknown";
}

std::string Error::ToString() const {
  std::string out(ErrorCodeName(code));
  if (!message.empty()) {
    out += ": ";
    out += message;
  }
  return out;
}

} // namespace rfpresence
