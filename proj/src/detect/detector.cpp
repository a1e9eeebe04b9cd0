#include "rfpresence/detect/detector.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <sstream>

#include "rfpresence/dsp/sliding.hpp"
#include "rfpresence/pipeline/train.hpp"

namespace rfpresence::detect {

namespace {

constexpr std::uint64_t kUsPerSecond = 1'000'000;

struct PendingWindow {
  std::uint64_t timestamp_us;
  dsp::InputImagePair input;
};

/// Emits second records in order as labels arrive.
class Voter {
 public:
  Voter(const DetectorConfig &cfg, DetectionTimeline &out, const SecondCallback &cb)
      : cfg_(cfg), out_(out), cb_(cb) {}

  void Add(const TimedLabel &l) {
    const std::uint64_t s = l.timestamp_us / kUsPerSecond;
    if (!open_) {
      open_ = true;
      second_ = s;
    }
    while (second_ < s) {
      Close();
      ++second_;
    }
    current_.push_back(l);
  }

  void Finish() {
    if (open_) {
      Close();
      open_ = false;
    }
  }

 private:
  void Close() {
    out_.seconds.push_back(VoteSecond(second_, current_, cfg_));
    current_.clear();
    if (cb_) {
      cb_(out_.seconds.back());
    }
  }

  const DetectorConfig &cfg_;
  DetectionTimeline &out_;
  const SecondCallback &cb_;
  bool open_{false};
  std::uint64_t second_{0};
  std::vector<TimedLabel> current_;
};

Status CheckModel(nn::Model &model, const dsp::PreprocessConfig &pre) {
  if (model.spec().variant != pre.variant) {
    return MakeError(ErrorCode::kVariantMismatch, "model is " + std::string(VariantName(model.spec().variant)) +
                                                      ", pre-processing is " + std::string(VariantName(pre.variant)));
  }
  const auto shapes = dsp::InputShapes(pre);
  const auto &branches = model.spec().branches;
  bool same = shapes.size() == branches.size();
  for (std::size_t b = 0; same && b < shapes.size(); ++b) {
    same = shapes[b] == branches[b].input;
  }
  if (!same) {
    return MakeError(ErrorCode::kShapeMismatch, "stream geometry does not produce the model's input shapes");
  }
  return {};
}

Result<DetectionTimeline> Run(nn::Model &model, csi::FrameSource &source, const StreamInferConfig &cfg,
                              bool vote, const SecondCallback &on_second) {
  if (auto st = cfg.detector.Validate(); !st.ok()) {
    return st.error();
  }
  if (cfg.batch == 0) {
    return MakeError(ErrorCode::kInvalidArgument, "inference batch must be positive");
  }
  const csi::StreamHeader &header = source.header();
  dsp::PreprocessConfig pc = cfg.preprocess;
  pc.frames = cfg.detector.window_len;
  pc.n_r = header.shape.n_r;
  pc.n_t = header.shape.n_t;
  if (auto st = CheckModel(model, pc); !st.ok()) {
    return st.error();
  }
  auto sliding = dsp::SlidingPreprocessor::Create(pc);
  if (!sliding.ok()) {
    return sliding.error();
  }
  const csi::WindowSpec wspec = csi::WindowSpec::ForInterval(cfg.interval_ms, pc.frames);

  DetectionTimeline out;
  Voter voter(cfg.detector, out, on_second);
  std::deque<std::uint64_t> stamps;
  std::size_t last_zero = 0;  // frames since the last frame with a zero entry, capped
  bool seen_zero = false;
  std::vector<PendingWindow> pending;
  pending.reserve(cfg.batch);

  auto flush = [&]() -> Status {
    if (pending.empty()) {
      return {};
    }
    std::vector<nn::Tensor> inputs;
    const std::size_t n = pending.size();
    for (std::size_t b = 0; b < pending.front().input.images.size(); ++b) {
      const auto &d = pending.front().input.images[b].dims;
      nn::Tensor t({n, d[0], d[1], d[2]});
      const std::size_t per = d[0] * d[1] * d[2];
      for (std::size_t i = 0; i < n; ++i) {
        const auto &src = pending[i].input.images[b].data;
        // Same f32 rounding as the training datasets.
        for (std::size_t e = 0; e < per; ++e) {
          t.data[i * per + e] = static_cast<float>(src[e]);
        }
      }
      inputs.push_back(std::move(t));
    }
    auto probs = model.Predict(inputs);
    if (!probs.ok()) {
      return probs.error();
    }
    for (std::size_t i = 0; i < n; ++i) {
      const TimedLabel l{pending[i].timestamp_us,
                         pipeline::DecideLabel(probs->data[2 * i], probs->data[2 * i + 1])};
      if (cfg.keep_labels) {
        out.labels.push_back(l);
      }
      if (vote) {
        voter.Add(l);
      }
    }
    out.stats.windows += n;
    pending.clear();
    return {};
  };

  auto reject = [&](ErrorCode code) {
    ++out.stats.rejected;
    ++out.stats.reasons[std::string(ErrorCodeName(code))];
  };

  std::size_t index = 0;
  while (true) {
    auto next = source.Next();
    if (!next.ok()) {
      return next.error();
    }
    if (!next->has_value()) {
      break;
    }
    const csi::CsiFrame &frame = **next;
    ++out.stats.frames;
    auto reduced = csi::DownselectSubcarriers(frame, header.shape, pc.n_f);
    if (!reduced.ok()) {
      return reduced.error();
    }
    const bool zero = std::any_of(reduced->data.begin(), reduced->data.end(),
                                  [](const Complex &c) { return !(std::norm(c) > 0.0); });
    if (zero) {
      // Every window holding this frame is invalid; restart accumulation.
      sliding->Reset();
      seen_zero = true;
      last_zero = 0;
    } else {
      ++last_zero;
      auto features = sliding->preprocessor().Features(reduced->data);
      if (!features.ok()) {
        return features.error();
      }
      if (auto st = sliding->Push(std::move(features).value()); !st.ok()) {
        return st.error();
      }
    }
    stamps.push_back(frame.timestamp_us);
    if (stamps.size() > pc.frames) {
      stamps.pop_front();
    }
    const std::size_t this_index = index++;
    if (stamps.size() < pc.frames || (this_index + 1 - pc.frames) % cfg.detector.stride != 0) {
      continue;
    }
    // Same check order as window validation: span, then zero entries.
    if (auto st = csi::CheckSpan(stamps.front(), stamps.back(), wspec); !st.ok()) {
      reject(st.error().code);
      continue;
    }
    if (seen_zero && last_zero < pc.frames) {
      reject(ErrorCode::kZeroMagnitudeEntry);
      continue;
    }
    auto input = sliding->Current();
    if (!input.ok()) {
      reject(input.error().code);
      continue;
    }
    pending.push_back({frame.timestamp_us, std::move(input).value()});
    if (pending.size() == cfg.batch) {
      if (auto st = flush(); !st.ok()) {
        return st.error();
      }
    }
  }
  if (auto st = flush(); !st.ok()) {
    return st.error();
  }
  if (vote) {
    voter.Finish();
  }
  return out;
}

} // namespace

Status DetectorConfig::Validate() const {
  if (window_len < 2 || stride == 0 || subinterval_ms == 0 || positives_per_subinterval == 0 ||
      subintervals_per_second == 0 || subinterval_votes == 0) {
    return MakeError(ErrorCode::kInvalidArgument, "detector lengths and thresholds must be positive");
  }
  if (static_cast<std::uint64_t>(subintervals_per_second) * subinterval_ms != 1000) {
    return MakeError(ErrorCode::kInvalidArgument, "subintervals must tile exactly one second");
  }
  if (subinterval_votes > subintervals_per_second) {
    return MakeError(ErrorCode::kInvalidArgument, "vote threshold exceeds the number of subintervals");
  }
  return {};
}

bool DecideFromCounts(std::span<const std::uint32_t> counts, const DetectorConfig &cfg) {
  const auto votes = std::count_if(counts.begin(), counts.end(),
                                   [&](std::uint32_t c) { return c >= cfg.positives_per_subinterval; });
  return static_cast<std::uint32_t>(votes) >= cfg.subinterval_votes;
}

SecondRecord VoteSecond(std::uint64_t second, std::span<const TimedLabel> labels, const DetectorConfig &cfg) {
  SecondRecord rec;
  rec.second = second;
  rec.counts.assign(cfg.subintervals_per_second, 0);
  const std::uint64_t begin = second * kUsPerSecond;
  const std::uint64_t width = static_cast<std::uint64_t>(cfg.subinterval_ms) * 1000;
  for (const TimedLabel &l : labels) {
    if (l.timestamp_us < begin || l.timestamp_us - begin >= kUsPerSecond) {
      continue;
    }
    if (l.label == 1) {
      ++rec.counts[(l.timestamp_us - begin) / width];
    }
  }
  rec.present = DecideFromCounts(rec.counts, cfg);
  return rec;
}

std::size_t DetectionTimeline::PositiveSeconds() const {
  return static_cast<std::size_t>(
      std::count_if(seconds.begin(), seconds.end(), [](const SecondRecord &r) { return r.present; }));
}

DetectionTimeline BuildTimeline(std::span<const TimedLabel> labels, const DetectorConfig &cfg) {
  DetectionTimeline out;
  const SecondCallback none;
  Voter voter(cfg, out, none);
  for (const TimedLabel &l : labels) {
    voter.Add(l);
  }
  voter.Finish();
  out.labels.assign(labels.begin(), labels.end());
  out.stats.windows = labels.size();
  return out;
}

Result<DetectionTimeline> RunDetection(nn::Model &model, csi::FrameSource &source, const StreamInferConfig &cfg,
                                       const SecondCallback &on_second) {
  return Run(model, source, cfg, true, on_second);
}

Result<DetectionTimeline> StreamInfer(nn::Model &model, csi::FrameSource &source, const StreamInferConfig &cfg) {
  return Run(model, source, cfg, false, {});
}

std::string FormatSecond(const SecondRecord &record) {
  std::string line = std::to_string(record.second);
  for (const std::uint32_t c : record.counts) {
    line += ", " + std::to_string(c);
  }
  line += record.present ? ", 1" : ", 0";
  return line;
}

std::string FormatTimeline(const DetectionTimeline &timeline) {
  std::string out;
  for (const SecondRecord &r : timeline.seconds) {
    out += FormatSecond(r);
    out += '\n';
  }
  return out;
}

Result<std::vector<SecondRecord>> ParseTimeline(const std::string &text, const std::string &origin) {
  std::vector<SecondRecord> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') {
      continue;
    }
    std::vector<std::uint64_t> fields;
    std::istringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) {
      const auto b = tok.find_first_not_of(' ');
      const auto e = tok.find_last_not_of(' ');
      if (b == std::string::npos) {
        return MakeError(ErrorCode::kParseError, origin + ":" + std::to_string(line_no) + ": empty field");
      }
      const std::string digits = tok.substr(b, e - b + 1);
      if (digits.find_first_not_of("0123456789") != std::string::npos) {
        return MakeError(ErrorCode::kParseError,
                         origin + ":" + std::to_string(line_no) + ": not an unsigned integer: " + digits);
      }
      fields.push_back(std::stoull(digits));
    }
    if (fields.size() < 3 || fields.back() > 1) {
      return MakeError(ErrorCode::kParseError, origin + ":" + std::to_string(line_no) + ": malformed record");
    }
    SecondRecord r;
    r.second = fields.front();
    for (std::size_t i = 1; i + 1 < fields.size(); ++i) {
      r.counts.push_back(static_cast<std::uint32_t>(fields[i]));
    }
    r.present = fields.back() == 1;
    out.push_back(std::move(r));
  }
  return out;
}

} // namespace rfpresence::detect
