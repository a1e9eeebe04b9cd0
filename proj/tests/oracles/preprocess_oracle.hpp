#pragma once

// Straight-line reference for the classifier inputs of the DFT variant, built
// only from the direct-sum transforms. Transceiver pair (q, p) flattens to
// column q * N_t + p; phase pair (q, p), q >= 1, to (q - 1) * N_t + p.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "dft_oracle.hpp"

namespace oracle {

/// Row-major I x N_f x J image.
struct Image {
  std::size_t rows{0};
  std::size_t cols{0};
  std::size_t depth{0};
  std::vector<double> data;

  double &at(std::size_t r, std::size_t c, std::size_t d) { return data[(r * cols + c) * depth + d]; }
  [[nodiscard]] double at(std::size_t r, std::size_t c, std::size_t d) const {
    return data[(r * cols + c) * depth + d];
  }
};

/// Accessor x(i, k, q, p) over a row-major I x N_f x N_r x N_t complex window.
struct Window {
  std::size_t frames, n_f, n_r, n_t;
  std::vector<Cplx> data;

  [[nodiscard]] Cplx at(std::size_t i, std::size_t k, std::size_t q, std::size_t p) const {
    return data[((i * n_f + k) * n_r + q) * n_t + p];
  }
};

/// Adds multiples of 2 pi until every step lies in (-pi, pi].
inline std::vector<double> Unwrap(const std::vector<double> &seq) {
  std::vector<double> out(seq.size());
  if (seq.empty()) {
    return out;
  }
  out[0] = seq[0];
  for (std::size_t i = 1; i < seq.size(); ++i) {
    double d = seq[i] - seq[i - 1];
    while (d > std::numbers::pi) {
      d -= 2.0 * std::numbers::pi;
    }
    while (d <= -std::numbers::pi) {
      d += 2.0 * std::numbers::pi;
    }
    out[i] = out[i - 1] + d;
  }
  return out;
}

inline double Log10p1(double v) { return std::log10(v + 1.0); }

inline Image MagnitudeImage(const Window &w, std::size_t crop) {
  const std::size_t j_count = w.n_r * w.n_t;
  const std::size_t first = (w.frames - crop) / 2;
  Image out{crop, w.n_f, j_count, std::vector<double>(crop * w.n_f * j_count)};
  for (std::size_t q = 0; q < w.n_r; ++q) {
    for (std::size_t p = 0; p < w.n_t; ++p) {
      std::vector<double> slice(w.frames * w.n_f);
      for (std::size_t i = 0; i < w.frames; ++i) {
        for (std::size_t k = 0; k < w.n_f; ++k) {
          slice[i * w.n_f + k] = std::abs(w.at(i, k, q, p)) / std::abs(w.at(0, k, q, p));
        }
      }
      const auto spec = Dft2Shift(slice, w.frames, w.n_f);
      for (std::size_t r = 0; r < crop; ++r) {
        for (std::size_t k = 0; k < w.n_f; ++k) {
          out.at(r, k, q * w.n_t + p) = Log10p1(std::abs(spec[(first + r) * w.n_f + k]));
        }
      }
    }
  }
  return out;
}

inline Image PhaseImage(const Window &w, std::size_t crop) {
  const std::size_t j_count = (w.n_r - 1) * w.n_t;
  const std::size_t first = (w.frames - crop) / 2;
  Image out{crop, w.n_f, j_count, std::vector<double>(crop * w.n_f * j_count)};
  for (std::size_t q = 1; q < w.n_r; ++q) {
    for (std::size_t p = 0; p < w.n_t; ++p) {
      for (std::size_t k = 0; k < w.n_f; ++k) {
        std::vector<double> seq(w.frames);
        for (std::size_t i = 0; i < w.frames; ++i) {
          seq[i] = std::arg(w.at(i, k, q, p) / w.at(i, k, 0, p));
        }
        const auto spec = Dft1Shift(Unwrap(seq));
        for (std::size_t r = 0; r < crop; ++r) {
          out.at(r, k, (q - 1) * w.n_t + p) = Log10p1(std::abs(spec[first + r]));
        }
      }
    }
  }
  return out;
}

} // namespace oracle
