#pragma once

#include <cstdint>

namespace rfpresence {

/// SplitMix64 finalizer; used to derive independent sub-seeds from a run seed.
constexpr std::uint64_t MixSeed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t stream) {
  return MixSeed(MixSeed(base) ^ (stream * 0xD1B54A32D192ED03ULL));
}

} // namespace rfpresence
