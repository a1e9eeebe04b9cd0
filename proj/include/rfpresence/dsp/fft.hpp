#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "rfpresence/core/array.hpp"

namespace rfpresence::dsp {

/// Precomputed unnormalized forward DFT of a fixed length,
/// X[m] = sum_n x[n] exp(-2 pi i m n / N).
///
/// Powers of two use an iterative radix-2 transform; short non-power-of-two
/// lengths use a twiddle-table direct sum; longer ones go through Bluestein's
/// chirp-z convolution on a power-of-two plan. Immutable after construction.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);
  ~FftPlan();
  FftPlan(FftPlan &&) noexcept;
  FftPlan &operator=(FftPlan &&) noexcept;

  [[nodiscard]] std::size_t size() const { return n_; }

  /// In-place forward transform; data.size() must equal size().
  void Forward(std::span<Complex> data) const;
  /// Unnormalized inverse (conjugate kernel).
  void Inverse(std::span<Complex> data) const;
  /// Transforms two real sequences with one complex transform of a + i b.
  /// `scratch`, `fa` and `fb` must have size() elements.
  void ForwardRealPair(std::span<const double> a, std::span<const double> b, std::span<Complex> scratch,
                       std::span<Complex> fa, std::span<Complex> fb) const;

 private:
  enum class Kind { kTrivial, kRadix2, kDirect, kBluestein };

  void Radix2(std::span<Complex> data) const;
  void Direct(std::span<Complex> data) const;
  void Bluestein(std::span<Complex> data) const;

  std::size_t n_{0};
  Kind kind_{Kind::kTrivial};
  std::vector<Complex> twiddles_;
  std::vector<std::size_t> bitrev_;
  std::vector<Complex> chirp_;       // exp(-i pi k^2 / N)
  std::vector<Complex> chirp_fft_;   // DFT of the conjugate chirp, padded
  std::unique_ptr<FftPlan> padded_;
};

/// |z| without the overflow guard of std::abs; inputs here are well scaled.
// Plain product; avoids the NaN/Inf recovery path of std::complex operator*.
inline Complex Mul(Complex a, Complex b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

inline double Magnitude(Complex z) { return std::sqrt(z.real() * z.real() + z.imag() * z.imag()); }

/// Index of the zero-frequency bin after a shift: n / 2.
inline std::size_t CenterIndex(std::size_t n) { return n / 2; }

/// Circular shift placing bin 0 at index n/2: out[j] = in[(j + n - n/2) % n].
void FftShift(std::span<const Complex> in, std::span<Complex> out);

} // namespace rfpresence::dsp
