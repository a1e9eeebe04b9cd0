#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rfpresence/core/result.hpp"
#include "rfpresence/dsp/preprocess.hpp"

namespace rfpresence::dsp {

/// Pre-processes every stride-1 window of a frame stream. For DFT variants the
/// cropped time spectra are updated per frame with a sliding DFT and recomputed
/// exactly every `refresh` frames; other variants fall back to the batch path.
/// Current() agrees with Preprocessor::FromFeatures on the same frames up to
/// floating-point rounding.
class SlidingPreprocessor {
 public:
  /// `refresh` = 0 selects one exact recomputation per window length.
  static Result<SlidingPreprocessor> Create(const PreprocessConfig &config, std::size_t refresh = 0);

  [[nodiscard]] const PreprocessConfig &config() const { return pre_.config(); }
  [[nodiscard]] const Preprocessor &preprocessor() const { return pre_; }

  /// Appends a frame; once full, the oldest frame leaves the window.
  Status Push(FrameFeatures frame);
  /// Forgets all frames, for example after a frame that cannot be processed.
  void Reset();

  [[nodiscard]] std::size_t size() const { return count_; }
  [[nodiscard]] bool Full() const { return count_ == pre_.config().frames; }

  /// Classifier input for the current window. Requires Full().
  [[nodiscard]] Result<InputImagePair> Current() const;

 private:
  SlidingPreprocessor(Preprocessor pre, std::size_t refresh);

  [[nodiscard]] bool Sliding() const;
  [[nodiscard]] const FrameFeatures &Slot(std::size_t age) const;
  [[nodiscard]] double UnwrappedAt(std::size_t slot, std::size_t e) const;
  void Refresh();

  Preprocessor pre_;
  std::size_t refresh_;
  std::size_t n_mag_;
  std::size_t n_phase_;
  std::vector<FrameFeatures> ring_;
  std::vector<std::int64_t> wraps_;  // slot-major, absolute 2*pi counts per phase series
  std::size_t head_{0};              // slot of the oldest frame
  std::size_t count_{0};
  std::size_t since_refresh_{0};
  std::vector<std::int64_t> wrap_base_;
  std::vector<Complex> rotate_;  // per crop row, exp(+2 pi i m / I)
  std::vector<Complex> mag_spec_;
  std::vector<Complex> phase_spec_;
};

} // namespace rfpresence::dsp
