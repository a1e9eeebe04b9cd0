#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace rfpresence {

enum class ErrorCode {
  kInvalidArgument,
  kIoError,
  kParseError,
  kChecksumMismatch,
  kShapeMismatch,
  // csi
  kWrongFrameCount,
  kZeroMagnitudeEntry,
  kSpanOutOfTolerance,
  kNonDivisibleSelection,
  // synth
  kEmptyScene,
  kSpeedLimitExceeded,
  // preprocess
  kDivisionByZeroFrame,
  kCropLargerThanInput,
  kZeroReferenceEntry,
  kNegativeInput,
  // nn
  kKernelLargerThanInput,
  kPoolLargerThanInput,
  kDegenerateBatch,
  // pipeline / detector
  kNoValidWindows,
  kSingleClassTrainingSet,
  kVariantMismatch,
};

std::string_view ErrorCodeName(ErrorCode code);

struct Error {
  ErrorCode code{ErrorCode::kInvalidArgument};
  std::string message{};

  [[nodiscard]] std::string ToString() const;
};

template <typename T>
class [[nodiscard]] Result {
 public:
  Result(T value) : storage_(std::move(value)) {}  // NOLINT(google-explicit-constructor)
  Result(Error error) : storage_(std::move(error)) {}  // NOLINT(google-explicit-constructor)

  [[nodiscard]] bool ok() const { return std::holds_alternative<T>(storage_); }
  explicit operator bool() const { return ok(); }

  T &value() & { return std::get<T>(storage_); }
  const T &value() const & { return std::get<T>(storage_); }
  T &&value() && { return std::get<T>(std::move(storage_)); }

  T *operator->() { return &value(); }
  const T *operator->() const { return &value(); }
  T &operator*() & { return value(); }
  const T &operator*() const & { return value(); }

  [[nodiscard]] const Error &error() const { return std::get<Error>(storage_); }

 private:
  std::variant<T, Error> storage_;
};

/// Result for operations that produce no value.
class [[nodiscard]] Status {
 public:
  Status() = default;
  Status(Error error) : error_(std::move(error)), ok_(false) {}  // NOLINT(google-explicit-constructor)

  [[nodiscard]] bool ok() const { return ok_; }
  explicit operator bool() const { return ok_; }
  [[nodiscard]] const Error &error() const { return error_; }

 private:
  Error error_{};
  bool ok_{true};
};

inline Error MakeError(ErrorCode code, std::string message) {
  return Error{code, std::move(message)};
}

} // namespace rfpresence
