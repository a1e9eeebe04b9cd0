#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfpresence/core/array.hpp"
#include "rfpresence/core/result.hpp"

namespace rfpresence::csi {

inline constexpr std::size_t kDefaultWindowFrames = 128;
inline constexpr std::size_t kDefaultSelectedSubcarriers = 14;
inline constexpr double kDefaultIntervalMs = 10.0;
inline constexpr double kDefaultSpanToleranceS = 0.064;

struct CsiShape {
  std::uint16_t n_sc{56};
  std::uint16_t n_r{3};
  std::uint16_t n_t{3};

  [[nodiscard]] std::size_t size() const {
    return static_cast<std::size_t>(n_sc) * n_r * n_t;
  }
  /// Subcarrier-major, then receive antenna, then transmit antenna.
  [[nodiscard]] std::size_t Index(std::size_t k, std::size_t q, std::size_t p) const {
    return (k * n_r + q) * n_t + p;
  }
  bool operator==(const CsiShape &) const = default;
};

struct StreamHeader {
  CsiShape shape{};
  /// Nominal spacing; not stored in the binary stream file.
  double sample_interval_ms{kDefaultIntervalMs};
  std::optional<std::uint8_t> label{};
  std::string day_id{};

  [[nodiscard]] Status Validate(std::size_t n_f = kDefaultSelectedSubcarriers) const;
  bool operator==(const StreamHeader &) const = default;
};

struct CsiFrame {
  std::uint64_t timestamp_us{0};
  std::vector<Complex> h{};

  [[nodiscard]] const Complex &at(const CsiShape &s, std::size_t k, std::size_t q, std::size_t p) const {
    return h[s.Index(k, q, p)];
  }
};

/// Validated window: I consecutive frames down-selected to N_f subcarriers
/// and stacked along time. x has shape I x N_f x N_r x N_t.
struct CsiWindow {
  std::vector<std::uint64_t> timestamps_us{};
  ComplexArray4 x{};
  std::optional<std::uint8_t> label{};

  [[nodiscard]] std::size_t frames() const { return x.dim(0); }
  [[nodiscard]] std::size_t n_f() const { return x.dim(1); }
  [[nodiscard]] std::size_t n_r() const { return x.dim(2); }
  [[nodiscard]] std::size_t n_t() const { return x.dim(3); }
};

struct WindowSpec {
  std::size_t frames{kDefaultWindowFrames};
  std::size_t n_f{kDefaultSelectedSubcarriers};
  double nominal_span_s{(kDefaultWindowFrames - 1) * kDefaultIntervalMs / 1000.0};
  double tol_s{kDefaultSpanToleranceS};

  /// Span of `frames` samples at `interval_ms` spacing.
  static WindowSpec ForInterval(double interval_ms, std::size_t frames = kDefaultWindowFrames);
};

/// Evenly spaced indices {0, s, ..., (n_f-1)s} with s = n_sc / n_f.
Result<std::vector<std::size_t>> SelectedSubcarriers(std::size_t n_sc, std::size_t n_f);

/// N_f x N_r x N_t array of the selected subcarriers of one frame.
Result<ComplexArray3> DownselectSubcarriers(const CsiFrame &frame, const CsiShape &shape, std::size_t n_f);

/// Stacks reduced frames along a new leading time axis.
Result<ComplexArray4> StackWindow(std::span<const ComplexArray3> reduced);

/// SpanOutOfTolerance unless |last - first - nominal| <= tol (seconds).
Status CheckSpan(std::uint64_t first_us, std::uint64_t last_us, const WindowSpec &spec);

/// Checks frame count, timestamp span, and strictly positive magnitude of
/// every selected entry, then down-selects and stacks.
Result<CsiWindow> ValidateWindow(std::span<const CsiFrame> frames, const CsiShape &shape, const WindowSpec &spec);
Result<CsiWindow> ValidateWindow(std::span<const CsiFrame *const> frames, const CsiShape &shape,
                                 const WindowSpec &spec);

} // namespace rfpresence::csi
