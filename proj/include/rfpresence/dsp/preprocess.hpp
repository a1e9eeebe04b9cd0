#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rfpresence/core/array.hpp"
#include "rfpresence/core/result.hpp"
#include "rfpresence/core/variant.hpp"
#include "rfpresence/csi/types.hpp"
#include "rfpresence/dsp/fft.hpp"

namespace rfpresence::dsp {

inline constexpr std::size_t kDefaultCrop = 50;

// ---- individual stages -----------------------------------------------------

/// out[i] = x_abs[i] ./ x_abs[0]. Input is I x N_f x J.
Result<RealArray3> NormalizeMagnitude(const RealArray3 &x_abs);

/// Unnormalized 2-D DFT over (time, subcarrier), shifted so the zero
/// frequency sits at (I/2, N_f/2).
ComplexMatrix Dft2Shift(const RealMatrix &slice);

/// Keeps rows (I-T)/2 .. (I-T)/2+T-1 and takes entry-wise magnitude.
Result<RealArray3> CropTime(const ComplexArray3 &shifted, std::size_t t);

/// angle(x[i,k,q,p] / x[i,k,0,p]) for q = 1..N_r-1, in (-pi, pi].
Result<RealArray4> PhaseDifference(const ComplexArray4 &x);

/// Unwraps so every consecutive difference lies in (-pi, pi]; out[0] = seq[0].
std::vector<double> UnwrapTime(std::span<const double> seq);

void UnwrapInPlace(std::span<double> seq);

/// Unnormalized length-I DFT, shifted so the zero frequency sits at I/2.
std::vector<Complex> Dft1Time(std::span<const double> seq);

/// log10(x + 1) element-wise.
Result<RealArray3> LogScale(const RealArray3 &a);

// ---- full pipeline ---------------------------------------------------------

/// Classifier input: one image per model branch, in branch order.
/// Parallel variants carry {A_abs, A_phase}; single-branch variants one image.
struct InputImagePair {
  std::vector<RealArray3> images;
};

struct PreprocessConfig {
  std::size_t frames{csi::kDefaultWindowFrames};
  std::size_t n_f{csi::kDefaultSelectedSubcarriers};
  std::size_t n_r{3};
  std::size_t n_t{3};
  std::size_t crop{kDefaultCrop};
  Variant variant{Variant::kWithDft};
};

/// Frame-local quantities that do not depend on the window position; the
/// streaming detector caches these per frame.
struct FrameFeatures {
  std::vector<double> magnitude;  // N_f x (N_r N_t)
  std::vector<double> phase;      // N_f x ((N_r - 1) N_t), raw angle differences
  std::vector<Complex> raw;       // N_f x (N_r N_t), only for the complex variant
};

/// Output image shapes (H, W, C) for a config, in branch order.
std::vector<std::array<std::size_t, 3>> InputShapes(const PreprocessConfig &config);

class Preprocessor {
 public:
  static Result<Preprocessor> Create(const PreprocessConfig &config);

  [[nodiscard]] const PreprocessConfig &config() const { return config_; }

  /// `reduced` is one down-selected frame (N_f x N_r x N_t).
  Result<FrameFeatures> Features(std::span<const Complex> reduced) const;

  Result<InputImagePair> FromFeatures(std::span<const FrameFeatures *const> frames) const;
  Result<InputImagePair> FromWindow(const csi::CsiWindow &window) const;

  // Building blocks shared with the sliding pre-processor. A crop spectrum is
  // series-major: series (k, j) owns the T cropped time bins, zero frequency at T/2.

  /// Cropped time spectra of series-major real input (each series `frames` long).
  std::vector<Complex> CropSpectra(const std::vector<double> &series) const;
  /// Subcarrier DFT, shift, magnitude and log of normalized-magnitude crop spectra.
  RealArray3 MagnitudeImageFromCrop(std::span<const Complex> crop) const;
  /// Magnitude and log of unwrapped-phase crop spectra.
  RealArray3 PhaseImageFromCrop(std::span<const Complex> crop) const;
  /// Arranges the two images per variant (not for the stacked-complex variant).
  InputImagePair Assemble(RealArray3 mag, RealArray3 phase) const;

 private:
  explicit Preprocessor(const PreprocessConfig &config);

  Result<InputImagePair> StackedComplex(std::span<const FrameFeatures *const> frames) const;

  PreprocessConfig config_;
  FftPlan time_plan_;
  FftPlan freq_plan_;
};

/// Debug dump of classifier inputs: per image a u16 rank and u16 dims
/// (8 bytes for rank 3), then the entries as little-endian f32.
Result<std::vector<std::uint8_t>> EncodeTensorDump(const InputImagePair &input);

/// Convenience wrapper: builds a Preprocessor for the window's shape.
Result<InputImagePair> MakeInput(const csi::CsiWindow &window, std::size_t t, Variant variant);

} // namespace rfpresence::dsp
