#include "rfpresence/dsp/fft.hpp"

#include <algorithm>
#include <cassert>
#include <numbers>

namespace rfpresence::dsp {

namespace {

constexpr std::size_t kDirectMax = 64;

bool IsPow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

Complex Twiddle(std::size_t k, std::size_t n) {
  return std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
}

} // namespace

FftPlan::FftPlan(std::size_t n) : n_(n) {
  if (n <= 1) {
    kind_ = Kind::kTrivial;
    return;
  }
  if (IsPow2(n)) {
    kind_ = Kind::kRadix2;
    twiddles_.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
      twiddles_[k] = Twiddle(k, n);
    }
    bitrev_.resize(n);
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) {
      ++bits;
    }
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b) {
        r |= ((i >> b) & 1U) << (bits - 1 - b);
      }
      bitrev_[i] = r;
    }
    return;
  }
  if (n <= kDirectMax) {
    kind_ = Kind::kDirect;
    twiddles_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      twiddles_[k] = Twiddle(k, n);
    }
    return;
  }

  kind_ = Kind::kBluestein;
  std::size_t m = 1;
  while (m < 2 * n - 1) {
    m <<= 1;
  }
  padded_ = std::make_unique<FftPlan>(m);
  chirp_.resize(n);
  const std::size_t two_n = 2 * n;
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2N keeps the angle argument small.
    const std::size_t k2 = (k * k) % two_n;
    chirp_[k] = std::polar(1.0, -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n));
  }
  chirp_fft_.assign(m, Complex{});
  chirp_fft_[0] = std::conj(chirp_[0]);
  for (std::size_t k = 1; k < n; ++k) {
    chirp_fft_[k] = std::conj(chirp_[k]);
    chirp_fft_[m - k] = std::conj(chirp_[k]);
  }
  padded_->Forward(chirp_fft_);
}

FftPlan::~FftPlan() = default;
FftPlan::FftPlan(FftPlan &&) noexcept = default;
FftPlan &FftPlan::operator=(FftPlan &&) noexcept = default;

void FftPlan::Forward(std::span<Complex> data) const {
  assert(data.size() == n_);
  switch (kind_) {
  case Kind::kTrivial: return;
  case Kind::kRadix2: Radix2(data); return;
  case Kind::kDirect: Direct(data); return;
  case Kind::kBluestein: Bluestein(data); return;
  }
}

void FftPlan::Inverse(std::span<Complex> data) const {
  for (auto &v : data) {
    v = std::conj(v);
  }
  Forward(data);
  for (auto &v : data) {
    v = std::conj(v);
  }
}

void FftPlan::ForwardRealPair(std::span<const double> a, std::span<const double> b, std::span<Complex> scratch,
                              std::span<Complex> fa, std::span<Complex> fb) const {
  assert(a.size() == n_ && b.size() == n_ && scratch.size() == n_ && fa.size() == n_ && fb.size() == n_);
  for (std::size_t i = 0; i < n_; ++i) {
    scratch[i] = {a[i], b[i]};
  }
  Forward(scratch);
  for (std::size_t k = 0; k < n_; ++k) {
    const Complex z = scratch[k];
    const Complex zc = std::conj(scratch[(n_ - k) % n_]);
    // A = (Z_k + conj Z_{-k}) / 2, B = (Z_k - conj Z_{-k}) / 2i.
    fa[k] = {0.5 * (z.real() + zc.real()), 0.5 * (z.imag() + zc.imag())};
    fb[k] = {0.5 * (z.imag() - zc.imag()), -0.5 * (z.real() - zc.real())};
  }
}

void FftPlan::Radix2(std::span<Complex> data) const {
  for (std::size_t i = 0; i < n_; ++i) {
    if (i < bitrev_[i]) {
      std::swap(data[i], data[bitrev_[i]]);
    }
  }
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n_ / len;
    for (std::size_t start = 0; start < n_; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const Complex t = Mul(twiddles_[j * step], data[start + j + half]);
        const Complex u = data[start + j];
        data[start + j] = u + t;
        data[start + j + half] = u - t;
      }
    }
  }
}

void FftPlan::Direct(std::span<Complex> data) const {
  if (n_ % 2 == 0) {
    // One decimation-in-time split: two direct sums of length n/2.
    const std::size_t h = n_ / 2;
    double er[kDirectMax / 2], ei[kDirectMax / 2], orr[kDirectMax / 2], oi[kDirectMax / 2];
    for (std::size_t j = 0; j < h; ++j) {
      er[j] = data[2 * j].real();
      ei[j] = data[2 * j].imag();
      orr[j] = data[2 * j + 1].real();
      oi[j] = data[2 * j + 1].imag();
    }
    for (std::size_t m = 0; m < h; ++m) {
      double e_re = 0.0, e_im = 0.0, o_re = 0.0, o_im = 0.0;
      std::size_t idx = 0;
      for (std::size_t j = 0; j < h; ++j) {
        // Twiddle of the half-length transform is twiddles_[2 * idx].
        const double wr = twiddles_[2 * idx].real();
        const double wi = twiddles_[2 * idx].imag();
        e_re += er[j] * wr - ei[j] * wi;
        e_im += er[j] * wi + ei[j] * wr;
        o_re += orr[j] * wr - oi[j] * wi;
        o_im += orr[j] * wi + oi[j] * wr;
        idx += m;
        if (idx >= h) {
          idx -= h;
        }
      }
      const Complex t = Mul(twiddles_[m], Complex(o_re, o_im));
      data[m] = {e_re + t.real(), e_im + t.imag()};
      data[m + h] = {e_re - t.real(), e_im - t.imag()};
    }
    return;
  }
  double re[kDirectMax];
  double im[kDirectMax];
  for (std::size_t j = 0; j < n_; ++j) {
    re[j] = data[j].real();
    im[j] = data[j].imag();
  }
  for (std::size_t m = 0; m < n_; ++m) {
    double acc_re = 0.0;
    double acc_im = 0.0;
    std::size_t idx = 0;
    for (std::size_t j = 0; j < n_; ++j) {
      const double wr = twiddles_[idx].real();
      const double wi = twiddles_[idx].imag();
      acc_re += re[j] * wr - im[j] * wi;
      acc_im += re[j] * wi + im[j] * wr;
      idx += m;
      if (idx >= n_) {
        idx -= n_;
      }
    }
    data[m] = {acc_re, acc_im};
  }
}

void FftPlan::Bluestein(std::span<Complex> data) const {
  const std::size_t m = padded_->size();
  std::vector<Complex> a(m, Complex{});
  for (std::size_t k = 0; k < n_; ++k) {
    a[k] = Mul(data[k], chirp_[k]);
  }
  padded_->Forward(a);
  for (std::size_t k = 0; k < m; ++k) {
    a[k] = Mul(a[k], chirp_fft_[k]);
  }
  padded_->Inverse(a);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n_; ++k) {
    data[k] = Mul(a[k], chirp_[k]) * scale;
  }
}

void FftShift(std::span<const Complex> in, std::span<Complex> out) {
  const std::size_t n = in.size();
  assert(out.size() == n);
  const std::size_t c = CenterIndex(n);
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = in[(j + n - c) % n];
  }
}

} // namespace rfpresence::dsp
