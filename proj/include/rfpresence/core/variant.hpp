#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace rfpresence {

/// Pre-processing + architecture combination. The numeric values are the
/// variant tag stored in model files; do not renumber.
enum class Variant : std::uint8_t {
  kWithDft = 0,         // parallel magnitude/phase CNN on DFT images
  kNoDft = 1,           // parallel CNN on normalized/unwrapped images
  kMagnitudeOnly = 2,   // single branch, DFT magnitude image
  kPhaseOnly = 3,       // single branch, DFT phase image
  kStackedComplex = 4,  // single branch, normalized real/imag stacked
  kSingleCnn = 5,       // single branch, DFT magnitude ++ phase along channels
  kSingleCnnNoDft = 6,  // single branch, no-DFT magnitude ++ phase along channels
};

inline constexpr Variant kAllVariants[] = {
    Variant::kWithDft,        Variant::kNoDft,     Variant::kMagnitudeOnly, Variant::kPhaseOnly,
    Variant::kStackedComplex, Variant::kSingleCnn, Variant::kSingleCnnNoDft,
};

std::string_view VariantName(Variant v);
std::optional<Variant> ParseVariant(std::string_view name);
std::optional<Variant> VariantFromTag(std::uint8_t tag);

/// True when the variant's images are DFT-domain (cropped to T rows).
bool UsesDft(Variant v);
/// True for the two-branch magnitude/phase architecture.
bool IsParallel(Variant v);

} // namespace rfpresence
