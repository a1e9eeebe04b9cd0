#include "rfpresence/dsp/sliding.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

namespace rfpresence::dsp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// 2*pi multiples added by unwrapping the step prev -> cur (same rule as UnwrapInPlace).
std::int64_t WrapStep(double prev, double cur) {
  const double d = cur - prev;
  return -static_cast<std::int64_t>(std::ceil((d - kPi) / kTwoPi));
}

} // namespace

SlidingPreprocessor::SlidingPreprocessor(Preprocessor pre, std::size_t refresh)
    : pre_(std::move(pre)), refresh_(refresh) {
  const PreprocessConfig &c = pre_.config();
  n_mag_ = c.n_f * c.n_r * c.n_t;
  n_phase_ = c.n_f * (c.n_r - 1) * c.n_t;
  ring_.resize(c.frames);
  if (Sliding()) {
    wraps_.assign(c.frames * n_phase_, 0);
    wrap_base_.assign(n_phase_, 0);
    rotate_.resize(c.crop);
    const double half = static_cast<double>(c.crop / 2);
    for (std::size_t r = 0; r < c.crop; ++r) {
      const double a = kTwoPi * (static_cast<double>(r) - half) / static_cast<double>(c.frames);
      rotate_[r] = Complex(std::cos(a), std::sin(a));
    }
    mag_spec_.assign(n_mag_ * c.crop, Complex{});
    phase_spec_.assign(n_phase_ * c.crop, Complex{});
  }
}

Result<SlidingPreprocessor> SlidingPreprocessor::Create(const PreprocessConfig &config, std::size_t refresh) {
  auto pre = Preprocessor::Create(config);
  if (!pre.ok()) {
    return pre.error();
  }
  return SlidingPreprocessor(std::move(pre).value(), refresh == 0 ? config.frames : refresh);
}

bool SlidingPreprocessor::Sliding() const { return UsesDft(pre_.config().variant); }

const FrameFeatures &SlidingPreprocessor::Slot(std::size_t age) const {
  return ring_[(head_ + age) % ring_.size()];
}

double SlidingPreprocessor::UnwrappedAt(std::size_t slot, std::size_t e) const {
  const std::int64_t k = wraps_[slot * n_phase_ + e] - wrap_base_[e];
  return ring_[slot].phase[e] + kTwoPi * static_cast<double>(k);
}

void SlidingPreprocessor::Reset() {
  head_ = 0;
  count_ = 0;
  since_refresh_ = 0;
}

Status SlidingPreprocessor::Push(FrameFeatures frame) {
  const std::size_t frames = ring_.size();
  if (frame.magnitude.size() != n_mag_ || frame.phase.size() != n_phase_) {
    return MakeError(ErrorCode::kShapeMismatch, "frame features do not match the preprocessor shape");
  }
  const std::size_t slot = (head_ + count_) % frames;
  if (!Sliding()) {
    ring_[slot] = std::move(frame);
    if (count_ < frames) {
      ++count_;
    } else {
      head_ = (head_ + 1) % frames;
    }
    return {};
  }

  // Absolute wrap counts continue from the newest frame.
  std::vector<std::int64_t> k_new(n_phase_, 0);
  if (count_ > 0) {
    const std::size_t last = (head_ + count_ - 1) % frames;
    for (std::size_t e = 0; e < n_phase_; ++e) {
      k_new[e] = wraps_[last * n_phase_ + e] + WrapStep(ring_[last].phase[e], frame.phase[e]);
    }
  }

  if (count_ < frames) {
    ring_[slot] = std::move(frame);
    std::copy(k_new.begin(), k_new.end(), wraps_.begin() + static_cast<std::ptrdiff_t>(slot * n_phase_));
    ++count_;
    if (count_ == frames) {
      Refresh();
    }
    return {};
  }

  // Full: slot == head_, the oldest frame leaves. S' = (S - x_old + x_new) exp(+2 pi i m / I).
  const std::size_t t = pre_.config().crop;
  const FrameFeatures &old = ring_[slot];
  for (std::size_t e = 0; e < n_mag_; ++e) {
    const double delta = frame.magnitude[e] - old.magnitude[e];
    Complex *s = mag_spec_.data() + e * t;
    for (std::size_t r = 0; r < t; ++r) {
      s[r] = Mul(s[r] + delta, rotate_[r]);
    }
  }
  for (std::size_t e = 0; e < n_phase_; ++e) {
    const double x_old = UnwrappedAt(slot, e);
    const double x_new = frame.phase[e] + kTwoPi * static_cast<double>(k_new[e] - wrap_base_[e]);
    const double delta = x_new - x_old;
    Complex *s = phase_spec_.data() + e * t;
    for (std::size_t r = 0; r < t; ++r) {
      s[r] = Mul(s[r] + delta, rotate_[r]);
    }
  }
  ring_[slot] = std::move(frame);
  std::copy(k_new.begin(), k_new.end(), wraps_.begin() + static_cast<std::ptrdiff_t>(slot * n_phase_));
  head_ = (head_ + 1) % frames;
  if (++since_refresh_ >= refresh_) {
    Refresh();
  }
  return {};
}

void SlidingPreprocessor::Refresh() {
  const std::size_t frames = ring_.size();
  since_refresh_ = 0;
  for (std::size_t e = 0; e < n_phase_; ++e) {
    wrap_base_[e] = wraps_[head_ * n_phase_ + e];
  }
  std::vector<double> series(n_mag_ * frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const FrameFeatures &f = Slot(i);
    for (std::size_t e = 0; e < n_mag_; ++e) {
      series[e * frames + i] = f.magnitude[e];
    }
  }
  mag_spec_ = pre_.CropSpectra(series);
  series.assign(n_phase_ * frames, 0.0);
  for (std::size_t i = 0; i < frames; ++i) {
    const std::size_t slot = (head_ + i) % frames;
    for (std::size_t e = 0; e < n_phase_; ++e) {
      series[e * frames + i] = UnwrappedAt(slot, e);
    }
  }
  phase_spec_ = pre_.CropSpectra(series);
}

Result<InputImagePair> SlidingPreprocessor::Current() const {
  const PreprocessConfig &c = pre_.config();
  if (!Full()) {
    return MakeError(ErrorCode::kWrongFrameCount,
                     "expected " + std::to_string(c.frames) + " frames, got " + std::to_string(count_));
  }
  if (!Sliding()) {
    std::vector<const FrameFeatures *> ptrs(c.frames);
    for (std::size_t i = 0; i < c.frames; ++i) {
      ptrs[i] = &Slot(i);
    }
    return pre_.FromFeatures(ptrs);
  }

  const std::size_t t = c.crop;
  const bool need_mag = c.variant != Variant::kPhaseOnly;
  const bool need_phase = c.variant != Variant::kMagnitudeOnly;
  RealArray3 mag;
  if (need_mag) {
    const FrameFeatures &ref = Slot(0);
    std::vector<Complex> crop(mag_spec_.size());
    for (std::size_t e = 0; e < n_mag_; ++e) {
      if (!(ref.magnitude[e] > 0.0)) {
        return MakeError(ErrorCode::kDivisionByZeroFrame,
                         "frame-0 magnitude entry " + std::to_string(e) + " is not positive");
      }
      const double inv = 1.0 / ref.magnitude[e];
      for (std::size_t r = 0; r < t; ++r) {
        crop[e * t + r] = mag_spec_[e * t + r] * inv;
      }
    }
    mag = pre_.MagnitudeImageFromCrop(crop);
  }
  RealArray3 phase;
  if (need_phase) {
    // The window's unwrapped series starts at its own first raw sample, so the
    // zero-frequency bin drops the accumulated offset of I samples.
    std::vector<Complex> crop(phase_spec_);
    const double n = static_cast<double>(c.frames);
    for (std::size_t e = 0; e < n_phase_; ++e) {
      const std::int64_t k = wraps_[head_ * n_phase_ + e] - wrap_base_[e];
      crop[e * t + t / 2] -= kTwoPi * static_cast<double>(k) * n;
    }
    phase = pre_.PhaseImageFromCrop(crop);
  }
  return pre_.Assemble(std::move(mag), std::move(phase));
}

} // namespace rfpresence::dsp
