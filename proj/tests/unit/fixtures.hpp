#pragma once

// Small deterministic builders shared by the unit tests.

#include <cstdint>
#include <random>
#include <vector>

#include "rfpresence/csi/types.hpp"

namespace fixtures {

using rfpresence::Complex;

/// Random non-zero coefficients; `offset` keeps magnitudes away from zero.
inline std::vector<Complex> RandomCoefficients(std::size_t n, std::mt19937_64 &rng, double offset = 2.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Complex> h(n);
  for (auto &c : h) {
    c = Complex(g(rng) + offset, g(rng));
  }
  return h;
}

/// `count` frames at `interval_us` spacing starting at `start_us`.
inline std::vector<rfpresence::csi::CsiFrame> RandomFrames(const rfpresence::csi::CsiShape &shape, std::size_t count,
                                                           std::uint64_t seed, std::uint64_t interval_us = 10'000,
                                                           std::uint64_t start_us = 0) {
  std::mt19937_64 rng(seed);
  std::vector<rfpresence::csi::CsiFrame> frames(count);
  for (std::size_t i = 0; i < count; ++i) {
    frames[i].timestamp_us = start_us + i * interval_us;
    frames[i].h = RandomCoefficients(shape.size(), rng);
  }
  return frames;
}

} // namespace fixtures
