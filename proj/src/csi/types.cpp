#include "rfpresence/csi/types.hpp"

#include <cmath>
#include <string>

namespace rfpresence::csi {

Status StreamHeader::Validate(std::size_t n_f) const {
  if (shape.n_sc == 0 || shape.n_r == 0 || shape.n_t == 0) {
    return MakeError(ErrorCode::kInvalidArgument, "stream dimensions must be positive");
  }
  if (shape.n_sc < n_f) {
    return MakeError(ErrorCode::kInvalidArgument,
                     "n_sc=" + std::to_string(shape.n_sc) + " is below n_f=" + std::to_string(n_f));
  }
  if (shape.n_r < 2) {
    return MakeError(ErrorCode::kInvalidArgument, "phase differencing needs n_r >= 2");
  }
  if (label && *label > 1) {
    return MakeError(ErrorCode::kInvalidArgument, "label must be 0 or 1");
  }
  if (!(sample_interval_ms > 0.0)) {
    return MakeError(ErrorCode::kInvalidArgument, "sample interval must be positive");
  }
  return {};
}

WindowSpec WindowSpec::ForInterval(double interval_ms, std::size_t frames) {
  WindowSpec spec;
  spec.frames = frames;
  spec.nominal_span_s = static_cast<double>(frames - 1) * interval_ms / 1000.0;
  // Same relative tolerance as 0.064 s on 1.27 s.
  spec.tol_s = spec.nominal_span_s * (kDefaultSpanToleranceS / 1.27);
  return spec;
}

Result<std::vector<std::size_t>> SelectedSubcarriers(std::size_t n_sc, std::size_t n_f) {
  if (n_f == 0 || n_f > n_sc || n_sc % n_f != 0) {
    return MakeError(ErrorCode::kNonDivisibleSelection,
                     std::to_string(n_f) + " subcarriers cannot be evenly selected from " + std::to_string(n_sc));
  }
  const std::size_t stride = n_sc / n_f;
  std::vector<std::size_t> idx(n_f);
  for (std::size_t i = 0; i < n_f; ++i) {
    idx[i] = i * stride;
  }
  return idx;
}

Result<ComplexArray3> DownselectSubcarriers(const CsiFrame &frame, const CsiShape &shape, std::size_t n_f) {
  if (frame.h.size() != shape.size()) {
    return MakeError(ErrorCode::kShapeMismatch, "frame has " + std::to_string(frame.h.size()) +
                                                    " coefficients, header implies " + std::to_string(shape.size()));
  }
  auto sel = SelectedSubcarriers(shape.n_sc, n_f);
  if (!sel.ok()) {
    return sel.error();
  }
  ComplexArray3 out({n_f, shape.n_r, shape.n_t});
  const std::size_t per_sc = static_cast<std::size_t>(shape.n_r) * shape.n_t;
  for (std::size_t i = 0; i < n_f; ++i) {
    const auto *src = frame.h.data() + sel.value()[i] * per_sc;
    std::copy(src, src + per_sc, out.data.begin() + static_cast<std::ptrdiff_t>(i * per_sc));
  }
  return out;
}

Result<ComplexArray4> StackWindow(std::span<const ComplexArray3> reduced) {
  if (reduced.empty()) {
    return MakeError(ErrorCode::kWrongFrameCount, "cannot stack an empty frame list");
  }
  const auto d = reduced.front().dims;
  ComplexArray4 x({reduced.size(), d[0], d[1], d[2]});
  const std::size_t per_frame = reduced.front().size();
  for (std::size_t i = 0; i < reduced.size(); ++i) {
    if (reduced[i].dims != d) {
      return MakeError(ErrorCode::kShapeMismatch, "frame " + std::to_string(i) + " has a different reduced shape");
    }
    std::copy(reduced[i].data.begin(), reduced[i].data.end(),
              x.data.begin() + static_cast<std::ptrdiff_t>(i * per_frame));
  }
  return x;
}

Status CheckSpan(std::uint64_t first_us, std::uint64_t last_us, const WindowSpec &spec) {
  const double span_s = last_us >= first_us ? static_cast<double>(last_us - first_us) * 1e-6
                                            : -static_cast<double>(first_us - last_us) * 1e-6;
  if (last_us < first_us || std::abs(span_s - spec.nominal_span_s) > spec.tol_s + 1e-12) {
    return MakeError(ErrorCode::kSpanOutOfTolerance, "window spans " + std::to_string(span_s) + " s");
  }
  return {};
}

namespace {

template <typename FrameAt>
Result<CsiWindow> ValidateImpl(std::size_t count, FrameAt frame_at, const CsiShape &shape, const WindowSpec &spec) {
  if (count != spec.frames) {
    return MakeError(ErrorCode::kWrongFrameCount,
                     "expected " + std::to_string(spec.frames) + " frames, got " + std::to_string(count));
  }
  auto sel = SelectedSubcarriers(shape.n_sc, spec.n_f);
  if (!sel.ok()) {
    return sel.error();
  }
  if (auto st = CheckSpan(frame_at(0).timestamp_us, frame_at(count - 1).timestamp_us, spec); !st.ok()) {
    return st.error();
  }

  const std::size_t per_sc = static_cast<std::size_t>(shape.n_r) * shape.n_t;
  CsiWindow w;
  w.x = ComplexArray4({count, spec.n_f, shape.n_r, shape.n_t});
  w.timestamps_us.resize(count);
  auto out = w.x.data.begin();
  for (std::size_t i = 0; i < count; ++i) {
    const CsiFrame &f = frame_at(i);
    if (f.h.size() != shape.size()) {
      return MakeError(ErrorCode::kShapeMismatch, "frame " + std::to_string(i) + " does not match stream shape");
    }
    w.timestamps_us[i] = f.timestamp_us;
    for (const std::size_t k : sel.value()) {
      for (std::size_t j = 0; j < per_sc; ++j) {
        const Complex v = f.h[k * per_sc + j];
        if (!(std::norm(v) > 0.0)) {
          return MakeError(ErrorCode::kZeroMagnitudeEntry, "frame " + std::to_string(i) + " subcarrier " +
                                                               std::to_string(k) + " has zero magnitude");
        }
        *out++ = v;
      }
    }
  }
  return w;
}

} // namespace

Result<CsiWindow> ValidateWindow(std::span<const CsiFrame> frames, const CsiShape &shape, const WindowSpec &spec) {
  return ValidateImpl(
      frames.size(), [&](std::size_t i) -> const CsiFrame & { return frames[i]; }, shape, spec);
}

Result<CsiWindow> ValidateWindow(std::span<const CsiFrame *const> frames, const CsiShape &shape,
                                 const WindowSpec &spec) {
  return ValidateImpl(
      frames.size(), [&](std::size_t i) -> const CsiFrame & { return *frames[i]; }, shape, spec);
}

} // namespace rfpresence::csi
