#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rfpresence/core/result.hpp"
#include "rfpresence/csi/stream_io.hpp"
#include "rfpresence/dsp/preprocess.hpp"
#include "rfpresence/nn/model.hpp"

namespace rfpresence::detect {

struct DetectorConfig {
  std::size_t window_len{csi::kDefaultWindowFrames};
  std::size_t stride{1};
  std::uint32_t subinterval_ms{200};
  std::uint32_t positives_per_subinterval{10};
  std::uint32_t subintervals_per_second{5};
  std::uint32_t subinterval_votes{3};

  /// Thresholds positive and subintervals_per_second * subinterval_ms = 1000.
  [[nodiscard]] Status Validate() const;
};

struct TimedLabel {
  std::uint64_t timestamp_us{0};  // last frame of the window
  std::uint8_t label{0};
  bool operator==(const TimedLabel &) const = default;
};

struct SecondRecord {
  std::uint64_t second{0};
  std::vector<std::uint32_t> counts;  // label-1 outputs per subinterval
  bool present{false};
  bool operator==(const SecondRecord &) const = default;
};

/// A subinterval is positive with at least `positives_per_subinterval` label-1
/// outputs; the second is positive with at least `subinterval_votes` of them.
bool DecideFromCounts(std::span<const std::uint32_t> counts, const DetectorConfig &cfg);

/// Votes one second aligned to timestamp 0. Labels outside the second are ignored.
SecondRecord VoteSecond(std::uint64_t second, std::span<const TimedLabel> labels, const DetectorConfig &cfg);

struct WindowStats {
  std::size_t frames{0};
  std::size_t windows{0};   // labelled windows
  std::size_t rejected{0};  // windows that failed validation
  std::map<std::string, std::size_t> reasons;
};

struct DetectionTimeline {
  std::vector<SecondRecord> seconds;
  std::vector<TimedLabel> labels;  // the stored label stream, for audit
  WindowStats stats;

  [[nodiscard]] std::size_t PositiveSeconds() const;
};

/// Groups a time-ordered label stream into consecutive seconds, from the
/// second of the first label through the second of the last one. Seconds
/// without labels are negative.
DetectionTimeline BuildTimeline(std::span<const TimedLabel> labels, const DetectorConfig &cfg);

struct StreamInferConfig {
  DetectorConfig detector{};
  dsp::PreprocessConfig preprocess{};  // n_r and n_t are taken from the stream header
  double interval_ms{csi::kDefaultIntervalMs};
  std::size_t batch{256};              // windows per inference call
  bool keep_labels{true};
};

using SecondCallback = std::function<void(const SecondRecord &)>;

/// Sliding-window inference over a frame stream followed by per-second voting.
/// `on_second`, when set, receives each record as soon as its second closes.
/// Errors: VariantMismatch when the model was trained for another variant,
/// ShapeMismatch when the stream does not produce the model's input shapes.
Result<DetectionTimeline> RunDetection(nn::Model &model, csi::FrameSource &source, const StreamInferConfig &cfg,
                                       const SecondCallback &on_second = {});

/// Only the label stream (no voting).
Result<DetectionTimeline> StreamInfer(nn::Model &model, csi::FrameSource &source, const StreamInferConfig &cfg);

/// "second_index, c1, ..., c5, decision" per line.
std::string FormatSecond(const SecondRecord &record);
std::string FormatTimeline(const DetectionTimeline &timeline);
/// Parses FormatTimeline output; lines starting with '#' are skipped.
Result<std::vector<SecondRecord>> ParseTimeline(const std::string &text, const std::string &origin);

} // namespace rfpresence::detect
