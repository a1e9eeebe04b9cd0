#include "rfpresence/dsp/preprocess.hpp"

#include <cmath>
#include <numbers>
#include <limits>
#include <string>

#include "rfpresence/core/binary_io.hpp"

namespace rfpresence::dsp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Angle of a * conj(b) mapped into (-pi, pi].
double AngleDifference(Complex a, Complex b) {
  double v = std::atan2(a.imag() * b.real() - a.real() * b.imag(), a.real() * b.real() + a.imag() * b.imag());
  if (v <= -kPi) {
    v += kTwoPi;
  }
  return v;
}

std::size_t ShiftSource(std::size_t j, std::size_t n) { return (j + n - CenterIndex(n)) % n; }

constexpr double kInvLn10 = 0.43429448190325182765;

double Log10p1(double x) { return std::log(1.0 + x) * kInvLn10; }

} // namespace

Result<RealArray3> NormalizeMagnitude(const RealArray3 &x_abs) {
  const std::size_t frames = x_abs.dim(0);
  const std::size_t per_frame = x_abs.dim(1) * x_abs.dim(2);
  if (frames == 0) {
    return MakeError(ErrorCode::kInvalidArgument, "empty magnitude array");
  }
  for (std::size_t e = 0; e < per_frame; ++e) {
    if (!(x_abs.data[e] > 0.0)) {
      return MakeError(ErrorCode::kDivisionByZeroFrame,
                       "frame-0 magnitude entry " + std::to_string(e) + " is not positive");
    }
  }
  RealArray3 out(x_abs.dims);
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t e = 0; e < per_frame; ++e) {
      out.data[i * per_frame + e] = x_abs.data[i * per_frame + e] / x_abs.data[e];
    }
  }
  return out;
}

ComplexMatrix Dft2Shift(const RealMatrix &slice) {
  const std::size_t rows = slice.dim(0);
  const std::size_t cols = slice.dim(1);
  const FftPlan time_plan(rows);
  const FftPlan freq_plan(cols);

  ComplexMatrix spec({rows, cols});
  std::vector<Complex> buf(rows);
  for (std::size_t k = 0; k < cols; ++k) {
    for (std::size_t i = 0; i < rows; ++i) {
      buf[i] = slice(i, k);
    }
    time_plan.Forward(buf);
    for (std::size_t i = 0; i < rows; ++i) {
      spec(i, k) = buf[i];
    }
  }
  for (std::size_t i = 0; i < rows; ++i) {
    freq_plan.Forward(std::span<Complex>(spec.data.data() + i * cols, cols));
  }
  ComplexMatrix out({rows, cols});
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = 0; k < cols; ++k) {
      out(i, k) = spec(ShiftSource(i, rows), ShiftSource(k, cols));
    }
  }
  return out;
}

Result<RealArray3> CropTime(const ComplexArray3 &shifted, std::size_t t) {
  const std::size_t frames = shifted.dim(0);
  if (t > frames) {
    return MakeError(ErrorCode::kCropLargerThanInput,
                     "crop " + std::to_string(t) + " exceeds " + std::to_string(frames) + " rows");
  }
  if (t % 2 != 0 || frames % 2 != 0) {
    return MakeError(ErrorCode::kInvalidArgument, "crop and input lengths must both be even");
  }
  const std::size_t first = (frames - t) / 2;
  const std::size_t per_row = shifted.dim(1) * shifted.dim(2);
  RealArray3 out({t, shifted.dim(1), shifted.dim(2)});
  for (std::size_t r = 0; r < t; ++r) {
    for (std::size_t e = 0; e < per_row; ++e) {
      out.data[r * per_row + e] = Magnitude(shifted.data[(first + r) * per_row + e]);
    }
  }
  return out;
}

Result<RealArray4> PhaseDifference(const ComplexArray4 &x) {
  const auto [frames, n_f, n_r, n_t] = x.dims;
  if (n_r < 2) {
    return MakeError(ErrorCode::kInvalidArgument, "phase difference needs at least two receive antennas");
  }
  RealArray4 out({frames, n_f, n_r - 1, n_t});
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t k = 0; k < n_f; ++k) {
      for (std::size_t p = 0; p < n_t; ++p) {
        const Complex ref = x(i, k, 0, p);
        if (!(std::norm(ref) > 0.0)) {
          return MakeError(ErrorCode::kZeroReferenceEntry, "reference antenna is zero at frame " +
                                                               std::to_string(i) + ", subcarrier " + std::to_string(k));
        }
        for (std::size_t q = 1; q < n_r; ++q) {
          out(i, k, q - 1, p) = AngleDifference(x(i, k, q, p), ref);
        }
      }
    }
  }
  return out;
}

void UnwrapInPlace(std::span<double> seq) {
  double correction = 0.0;
  double prev = seq.empty() ? 0.0 : seq[0];
  for (std::size_t i = 1; i < seq.size(); ++i) {
    const double raw = seq[i];
    const double d = raw - prev;
    // Smallest 2*pi multiple that brings d into (-pi, pi].
    const double wrapped = d - kTwoPi * std::ceil((d - kPi) / kTwoPi);
    correction += wrapped - d;
    seq[i] = raw + correction;
    prev = raw;
  }
}

std::vector<double> UnwrapTime(std::span<const double> seq) {
  std::vector<double> out(seq.begin(), seq.end());
  UnwrapInPlace(out);
  return out;
}

std::vector<Complex> Dft1Time(std::span<const double> seq) {
  const FftPlan plan(seq.size());
  std::vector<Complex> buf(seq.begin(), seq.end());
  plan.Forward(buf);
  std::vector<Complex> out(buf.size());
  FftShift(buf, out);
  return out;
}

Result<RealArray3> LogScale(const RealArray3 &a) {
  RealArray3 out(a.dims);
  for (std::size_t e = 0; e < a.size(); ++e) {
    if (!(a.data[e] >= 0.0)) {
      return MakeError(ErrorCode::kNegativeInput, "log scaling needs non-negative input");
    }
    out.data[e] = Log10p1(a.data[e]);
  }
  return out;
}

std::vector<std::array<std::size_t, 3>> InputShapes(const PreprocessConfig &c) {
  const std::size_t j_mag = c.n_r * c.n_t;
  const std::size_t j_phase = (c.n_r - 1) * c.n_t;
  const std::size_t rows = UsesDft(c.variant) ? c.crop : c.frames;
  switch (c.variant) {
  case Variant::kWithDft:
  case Variant::kNoDft:
    return {{rows, c.n_f, j_mag}, {rows, c.n_f, j_phase}};
  case Variant::kMagnitudeOnly: return {{rows, c.n_f, j_mag}};
  case Variant::kPhaseOnly: return {{rows, c.n_f, j_phase}};
  case Variant::kStackedComplex: return {{rows, c.n_f, 2 * j_mag}};
  case Variant::kSingleCnn:
  case Variant::kSingleCnnNoDft:
    return {{rows, c.n_f, j_mag + j_phase}};
  }
  return {};
}

Preprocessor::Preprocessor(const PreprocessConfig &config)
    : config_(config), time_plan_(config.frames), freq_plan_(config.n_f) {}

Result<Preprocessor> Preprocessor::Create(const PreprocessConfig &config) {
  if (config.frames < 2 || config.n_f == 0 || config.n_t == 0) {
    return MakeError(ErrorCode::kInvalidArgument, "window needs at least two frames and one subcarrier");
  }
  if (config.n_r < 2) {
    return MakeError(ErrorCode::kInvalidArgument, "phase differencing needs n_r >= 2");
  }
  if (UsesDft(config.variant)) {
    if (config.crop > config.frames) {
      return MakeError(ErrorCode::kCropLargerThanInput, "crop exceeds window length");
    }
    if (config.crop % 2 != 0 || config.frames % 2 != 0 || config.crop == 0) {
      return MakeError(ErrorCode::kInvalidArgument, "crop and window length must both be even");
    }
  }
  return Preprocessor(config);
}

Result<FrameFeatures> Preprocessor::Features(std::span<const Complex> reduced) const {
  const std::size_t n_f = config_.n_f;
  const std::size_t n_r = config_.n_r;
  const std::size_t n_t = config_.n_t;
  if (reduced.size() != n_f * n_r * n_t) {
    return MakeError(ErrorCode::kShapeMismatch, "reduced frame does not match N_f x N_r x N_t");
  }
  FrameFeatures f;
  f.magnitude.resize(reduced.size());
  for (std::size_t e = 0; e < reduced.size(); ++e) {
    f.magnitude[e] = Magnitude(reduced[e]);
  }
  const std::size_t j_phase = (n_r - 1) * n_t;
  f.phase.resize(n_f * j_phase);
  for (std::size_t k = 0; k < n_f; ++k) {
    const Complex *row = reduced.data() + k * n_r * n_t;
    for (std::size_t p = 0; p < n_t; ++p) {
      const Complex ref = row[p];
      if (!(std::norm(ref) > 0.0)) {
        return MakeError(ErrorCode::kZeroReferenceEntry, "reference antenna is zero at subcarrier " +
                                                             std::to_string(k));
      }
      for (std::size_t q = 1; q < n_r; ++q) {
        f.phase[k * j_phase + (q - 1) * n_t + p] = AngleDifference(row[q * n_t + p], ref);
      }
    }
  }
  if (config_.variant == Variant::kStackedComplex) {
    f.raw.assign(reduced.begin(), reduced.end());
  }
  return f;
}

std::vector<Complex> Preprocessor::CropSpectra(const std::vector<double> &series) const {
  const std::size_t frames = config_.frames;
  const std::size_t t = config_.crop;
  const std::size_t first = (frames - t) / 2;
  const std::size_t count = series.size() / frames;
  std::vector<Complex> crop(count * t);
  std::vector<Complex> scratch(frames);
  std::vector<Complex> fa(frames);
  std::vector<Complex> fb(frames);
  auto keep = [&](std::size_t s, const std::vector<Complex> &spec) {
    for (std::size_t r = 0; r < t; ++r) {
      crop[s * t + r] = spec[ShiftSource(first + r, frames)];
    }
  };
  std::size_t s = 0;
  for (; s + 1 < count; s += 2) {
    time_plan_.ForwardRealPair(std::span(series.data() + s * frames, frames),
                               std::span(series.data() + (s + 1) * frames, frames), scratch, fa, fb);
    keep(s, fa);
    keep(s + 1, fb);
  }
  if (s < count) {
    for (std::size_t i = 0; i < frames; ++i) {
      fa[i] = series[s * frames + i];
    }
    time_plan_.Forward(fa);
    keep(s, fa);
  }
  return crop;
}

RealArray3 Preprocessor::MagnitudeImageFromCrop(std::span<const Complex> crop) const {
  const std::size_t n_f = config_.n_f;
  const std::size_t j_count = config_.n_r * config_.n_t;
  const std::size_t t = config_.crop;

  RealArray3 out({t, n_f, j_count});
  std::vector<Complex> row(n_f);
  // Row r holds time frequency r - t/2. A real input has X(-m, -q) = conj X(m, q),
  // so rows 1 .. t/2-1 mirror rows t-1 .. t/2+1.
  const std::size_t half = t / 2;
  for (std::size_t r = 0; r < t; ++r) {
    if (r != 0 && r < half) {
      continue;
    }
    for (std::size_t j = 0; j < j_count; ++j) {
      for (std::size_t k = 0; k < n_f; ++k) {
        row[k] = crop[(k * j_count + j) * t + r];
      }
      freq_plan_.Forward(row);
      for (std::size_t k = 0; k < n_f; ++k) {
        out(r, k, j) = Log10p1(Magnitude(row[ShiftSource(k, n_f)]));
      }
    }
  }
  const std::size_t c2 = 2 * CenterIndex(n_f);
  for (std::size_t r = 1; r < half; ++r) {
    for (std::size_t k = 0; k < n_f; ++k) {
      const std::size_t km = (c2 + n_f - k) % n_f;
      for (std::size_t j = 0; j < j_count; ++j) {
        out(r, k, j) = out(t - r, km, j);
      }
    }
  }
  return out;
}

RealArray3 Preprocessor::PhaseImageFromCrop(std::span<const Complex> crop) const {
  const std::size_t n_f = config_.n_f;
  const std::size_t j_count = (config_.n_r - 1) * config_.n_t;
  const std::size_t t = config_.crop;
  const std::size_t half = t / 2;

  RealArray3 out({t, n_f, j_count});
  for (std::size_t k = 0; k < n_f; ++k) {
    for (std::size_t j = 0; j < j_count; ++j) {
      const Complex *sp = crop.data() + (k * j_count + j) * t;
      out(0, k, j) = Log10p1(Magnitude(sp[0]));
      for (std::size_t r = half; r < t; ++r) {
        out(r, k, j) = Log10p1(Magnitude(sp[r]));
      }
      // |X(-m)| = |X(m)| for a real series; the sources are filled above.
      for (std::size_t r = 1; r < half; ++r) {
        out(r, k, j) = out(t - r, k, j);
      }
    }
  }
  return out;
}

InputImagePair Preprocessor::Assemble(RealArray3 mag, RealArray3 phase) const {
  const std::size_t n_f = config_.n_f;
  const std::size_t j_mag = config_.n_r * config_.n_t;
  const std::size_t j_phase = (config_.n_r - 1) * config_.n_t;
  InputImagePair out;
  switch (config_.variant) {
  case Variant::kWithDft:
  case Variant::kNoDft:
    out.images.push_back(std::move(mag));
    out.images.push_back(std::move(phase));
    break;
  case Variant::kMagnitudeOnly: out.images.push_back(std::move(mag)); break;
  case Variant::kPhaseOnly: out.images.push_back(std::move(phase)); break;
  case Variant::kSingleCnn:
  case Variant::kSingleCnnNoDft: {
    const std::size_t rows = mag.dim(0);
    RealArray3 joint({rows, n_f, j_mag + j_phase});
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t k = 0; k < n_f; ++k) {
        for (std::size_t j = 0; j < j_mag; ++j) {
          joint(r, k, j) = mag(r, k, j);
        }
        for (std::size_t j = 0; j < j_phase; ++j) {
          joint(r, k, j_mag + j) = phase(r, k, j);
        }
      }
    }
    out.images.push_back(std::move(joint));
    break;
  }
  case Variant::kStackedComplex: break;
  }
  return out;
}

Result<InputImagePair> Preprocessor::FromFeatures(std::span<const FrameFeatures *const> frames) const {
  const std::size_t count = config_.frames;
  const std::size_t n_f = config_.n_f;
  const std::size_t j_mag = config_.n_r * config_.n_t;
  const std::size_t j_phase = (config_.n_r - 1) * config_.n_t;
  if (frames.size() != count) {
    return MakeError(ErrorCode::kWrongFrameCount,
                     "expected " + std::to_string(count) + " frames, got " + std::to_string(frames.size()));
  }
  for (const auto *f : frames) {
    if (f->magnitude.size() != n_f * j_mag || f->phase.size() != n_f * j_phase) {
      return MakeError(ErrorCode::kShapeMismatch, "frame features do not match the preprocessor shape");
    }
  }
  const Variant v = config_.variant;
  if (v == Variant::kStackedComplex) {
    return StackedComplex(frames);
  }
  const bool need_mag = v != Variant::kPhaseOnly;
  const bool need_phase = v != Variant::kMagnitudeOnly;

  // Series-major buffers: entry (k, j) owns `count` consecutive time samples.
  RealArray3 mag;
  if (need_mag) {
    const auto &ref = frames[0]->magnitude;
    for (std::size_t e = 0; e < ref.size(); ++e) {
      if (!(ref[e] > 0.0)) {
        return MakeError(ErrorCode::kDivisionByZeroFrame,
                         "frame-0 magnitude entry " + std::to_string(e) + " is not positive");
      }
    }
    std::vector<double> series(n_f * j_mag * count);
    for (std::size_t i = 0; i < count; ++i) {
      const auto &m = frames[i]->magnitude;
      for (std::size_t e = 0; e < m.size(); ++e) {
        series[e * count + i] = m[e] / ref[e];
      }
    }
    if (UsesDft(v)) {
      mag = MagnitudeImageFromCrop(CropSpectra(series));
    } else {
      mag = RealArray3({count, n_f, j_mag});
      for (std::size_t e = 0; e < n_f * j_mag; ++e) {
        for (std::size_t i = 0; i < count; ++i) {
          mag.data[i * n_f * j_mag + e] = series[e * count + i];
        }
      }
    }
  }

  RealArray3 phase;
  if (need_phase) {
    std::vector<double> series(n_f * j_phase * count);
    for (std::size_t i = 0; i < count; ++i) {
      const auto &p = frames[i]->phase;
      for (std::size_t e = 0; e < p.size(); ++e) {
        series[e * count + i] = p[e];
      }
    }
    for (std::size_t e = 0; e < n_f * j_phase; ++e) {
      UnwrapInPlace(std::span(series.data() + e * count, count));
    }
    if (UsesDft(v)) {
      phase = PhaseImageFromCrop(CropSpectra(series));
    } else {
      phase = RealArray3({count, n_f, j_phase});
      for (std::size_t e = 0; e < n_f * j_phase; ++e) {
        for (std::size_t i = 0; i < count; ++i) {
          phase.data[i * n_f * j_phase + e] = series[e * count + i];
        }
      }
    }
  }
  return Assemble(std::move(mag), std::move(phase));
}

Result<InputImagePair> Preprocessor::StackedComplex(std::span<const FrameFeatures *const> frames) const {
  const std::size_t count = config_.frames;
  const std::size_t n_f = config_.n_f;
  const std::size_t j_mag = config_.n_r * config_.n_t;
  for (const auto *f : frames) {
    if (f->raw.size() != n_f * j_mag) {
      return MakeError(ErrorCode::kShapeMismatch, "complex variant needs raw frame coefficients");
    }
  }
  const auto &ref = frames[0]->raw;
  for (const auto &c : ref) {
    if (!(std::norm(c) > 0.0)) {
      return MakeError(ErrorCode::kDivisionByZeroFrame, "frame-0 coefficient is zero");
    }
  }
  RealArray3 stacked({count, n_f, 2 * j_mag});
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t k = 0; k < n_f; ++k) {
      for (std::size_t j = 0; j < j_mag; ++j) {
        const Complex z = frames[i]->raw[k * j_mag + j] / ref[k * j_mag + j];
        stacked(i, k, j) = z.real();
        stacked(i, k, j_mag + j) = z.imag();
      }
    }
  }
  InputImagePair out;
  out.images.push_back(std::move(stacked));
  return out;
}

Result<InputImagePair> Preprocessor::FromWindow(const csi::CsiWindow &window) const {
  if (window.frames() != config_.frames || window.n_f() != config_.n_f || window.n_r() != config_.n_r ||
      window.n_t() != config_.n_t) {
    return MakeError(ErrorCode::kShapeMismatch, "window shape does not match the preprocessor");
  }
  const std::size_t per_frame = config_.n_f * config_.n_r * config_.n_t;
  std::vector<FrameFeatures> features;
  features.reserve(config_.frames);
  for (std::size_t i = 0; i < config_.frames; ++i) {
    auto f = Features(std::span<const Complex>(window.x.data.data() + i * per_frame, per_frame));
    if (!f.ok()) {
      return f.error();
    }
    features.push_back(std::move(f).value());
  }
  std::vector<const FrameFeatures *> ptrs;
  ptrs.reserve(features.size());
  for (const auto &f : features) {
    ptrs.push_back(&f);
  }
  return FromFeatures(ptrs);
}

Result<InputImagePair> MakeInput(const csi::CsiWindow &window, std::size_t t, Variant variant) {
  PreprocessConfig cfg;
  cfg.frames = window.frames();
  cfg.n_f = window.n_f();
  cfg.n_r = window.n_r();
  cfg.n_t = window.n_t();
  cfg.crop = t;
  cfg.variant = variant;
  auto pre = Preprocessor::Create(cfg);
  if (!pre.ok()) {
    return pre.error();
  }
  return pre->FromWindow(window);
}

Result<std::vector<std::uint8_t>> EncodeTensorDump(const InputImagePair &input) {
  ByteWriter w;
  for (const RealArray3 &img : input.images) {
    w.U16(3);
    for (const std::size_t d : img.dims) {
      if (d > std::numeric_limits<std::uint16_t>::max()) {
        return MakeError(ErrorCode::kInvalidArgument, "dimension too large for the dump header");
      }
      w.U16(static_cast<std::uint16_t>(d));
    }
    for (const double v : img.data) {
      w.F32(static_cast<float>(v));
    }
  }
  return w.bytes();
}

} // namespace rfpresence::dsp
