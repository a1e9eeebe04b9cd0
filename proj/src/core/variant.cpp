#include "rfpresence/core/variant.hpp"

namespace rfpresence {

std::string_view VariantName(Variant v) {
  switch (v) {
  case Variant::kWithDft: return "with-dft";
  case Variant::kNoDft: return "no-dft";
  case Variant::kMagnitudeOnly: return "mag-only";
  case Variant::kPhaseOnly: return "phase-only";
  case Variant::kStackedComplex: return "complex";
  case Variant::kSingleCnn: return "single-cnn";
  case Variant::kSingleCnnNoDft: return "single-cnn-no-dft";
  }
  return "unknown";
}

std::optional<Variant> ParseVariant(std::string_view name) {
  for (const auto v : kAllVariants) {
    if (VariantName(v) == name) {
      return v;
    }
  }
  return std::nullopt;
}

std::optional<Variant> VariantFromTag(std::uint8_t tag) {
  for (const auto v : kAllVariants) {
    if (static_cast<std::uint8_t>(v) == tag) {
      return v;
    }
  }
  return std::nullopt;
}

bool UsesDft(Variant v) {
  switch (v) {
  case Variant::kWithDft:
  case Variant::kMagnitudeOnly:
  case Variant::kPhaseOnly:
  case Variant::kSingleCnn:
    return true;
  case Variant::kNoDft:
  case Variant::kStackedComplex:
  case Variant::kSingleCnnNoDft:
    return false;
  }
  return true;
}

bool IsParallel(Variant v) { return v == Variant::kWithDft || v == Variant::kNoDft; }

} // namespace rfpresence
