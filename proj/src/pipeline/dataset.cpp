#include "rfpresence/pipeline/dataset.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <optional>
#include <random>
#include <set>

#include "rfpresence/core/parallel.hpp"

namespace rfpresence::pipeline {

namespace {

bool SameLayout(const Dataset &a, const Dataset &b) { return a.variant == b.variant && a.shapes == b.shapes; }

Dataset EmptyLike(const Dataset &d) {
  Dataset out;
  out.variant = d.variant;
  out.shapes = d.shapes;
  out.days = d.days;
  return out;
}

Result<Dataset> BuildUnchecked(csi::FrameSource &source, const WindowingConfig &config, BuildStats &stats) {
  const csi::StreamHeader &header = source.header();
  if (!header.label) {
    return MakeError(ErrorCode::kInvalidArgument, "stream '" + header.day_id + "' carries no label");
  }
  if (config.stride == 0) {
    return MakeError(ErrorCode::kInvalidArgument, "window stride must be positive");
  }
  dsp::PreprocessConfig pc = config.preprocess;
  pc.n_r = header.shape.n_r;
  pc.n_t = header.shape.n_t;
  if (auto st = header.Validate(pc.n_f); !st.ok()) {
    return st.error();
  }
  auto pre = dsp::Preprocessor::Create(pc);
  if (!pre.ok()) {
    return pre.error();
  }
  csi::WindowSpec spec = csi::WindowSpec::ForInterval(config.interval_ms, pc.frames);
  spec.n_f = pc.n_f;

  Dataset out;
  out.variant = pc.variant;
  out.shapes = dsp::InputShapes(pc);
  out.days = {header.day_id};

  std::deque<csi::CsiFrame> buffer;
  std::size_t index = 0;
  std::vector<const csi::CsiFrame *> ptrs(pc.frames);
  while (true) {
    auto next = source.Next();
    if (!next.ok()) {
      return next.error();
    }
    if (!next.value()) {
      break;
    }
    buffer.push_back(std::move(*next.value()));
    if (buffer.size() > pc.frames) {
      buffer.pop_front();
    }
    ++index;
    if (index < pc.frames || (index - pc.frames) % config.stride != 0) {
      continue;
    }
    ++stats.windows;
    for (std::size_t i = 0; i < pc.frames; ++i) {
      ptrs[i] = &buffer[i];
    }
    auto window = csi::ValidateWindow(ptrs, header.shape, spec);
    if (!window.ok()) {
      ++stats.rejected;
      ++stats.reasons[window.error().code];
      continue;
    }
    auto input = pre->FromWindow(window.value());
    if (!input.ok()) {
      ++stats.rejected;
      ++stats.reasons[input.error().code];
      continue;
    }
    Sample s;
    s.label = *header.label;
    s.day = 0;
    for (const auto &img : input->images) {
      s.images.emplace_back(img.data.begin(), img.data.end());
    }
    out.samples.push_back(std::move(s));
  }
  return out;
}

} // namespace

std::size_t Dataset::CountLabel(std::uint8_t label) const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [label](const Sample &s) { return s.label == label; }));
}

std::vector<std::string> Dataset::PresentDays() const {
  std::vector<bool> used(days.size(), false);
  for (const auto &s : samples) {
    used[s.day] = true;
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < days.size(); ++i) {
    if (used[i]) {
      out.push_back(days[i]);
    }
  }
  return out;
}

void Dataset::AddFrom(const Dataset &other, const Sample &s) {
  const std::string &day = other.days[s.day];
  auto it = std::find(days.begin(), days.end(), day);
  Sample copy = s;
  if (it == days.end()) {
    days.push_back(day);
    copy.day = static_cast<std::uint32_t>(days.size() - 1);
  } else {
    copy.day = static_cast<std::uint32_t>(it - days.begin());
  }
  samples.push_back(std::move(copy));
}

void BuildStats::Merge(const BuildStats &o) {
  windows += o.windows;
  rejected += o.rejected;
  for (const auto &[code, n] : o.reasons) {
    reasons[code] += n;
  }
}

Result<Dataset> BuildFromSource(csi::FrameSource &source, const WindowingConfig &config, BuildStats *stats) {
  BuildStats local;
  auto out = BuildUnchecked(source, config, local);
  if (stats != nullptr) {
    stats->Merge(local);
  }
  if (out.ok() && out->samples.empty()) {
    return MakeError(ErrorCode::kNoValidWindows, "no valid windows in stream '" + source.header().day_id + "' (" +
                                                     std::to_string(local.windows) + " formed, all rejected)");
  }
  return out;
}

Result<Dataset> BuildDataset(const std::vector<std::string> &files, const WindowingConfig &config,
                             BuildStats *stats) {
  std::vector<std::optional<Result<Dataset>>> parts(files.size());
  std::vector<BuildStats> part_stats(files.size());
  ParallelFor(files.size(), [&](std::size_t i) {
    auto reader = csi::StreamReader::Open(files[i]);
    if (!reader.ok()) {
      parts[i].emplace(reader.error());
      return;
    }
    parts[i].emplace(BuildUnchecked(*reader.value(), config, part_stats[i]));
  });
  Dataset out;
  out.variant = config.preprocess.variant;
  bool have_layout = false;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (stats != nullptr) {
      stats->Merge(part_stats[i]);
    }
    if (!parts[i]->ok()) {
      return parts[i]->error();
    }
    const Dataset &d = parts[i]->value();
    if (!have_layout) {
      out.shapes = d.shapes;
      have_layout = true;
    } else if (!SameLayout(out, d)) {
      return MakeError(ErrorCode::kShapeMismatch, "file '" + files[i] + "' has a different antenna layout");
    }
    for (const auto &s : d.samples) {
      out.AddFrom(d, s);
    }
  }
  if (out.samples.empty()) {
    return MakeError(ErrorCode::kNoValidWindows, "no valid windows in " + std::to_string(files.size()) + " file(s)");
  }
  return out;
}

Result<Dataset> Concat(const Dataset &a, const Dataset &b) {
  if (!SameLayout(a, b)) {
    return MakeError(ErrorCode::kShapeMismatch, "datasets differ in variant or image shapes");
  }
  Dataset out = a;
  for (const auto &s : b.samples) {
    out.AddFrom(b, s);
  }
  return out;
}

Dataset Subsample(const Dataset &d, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  count = std::min(count, idx.size());
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first `count` slots become the chosen set.
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  Dataset out = EmptyLike(d);
  for (std::size_t i : idx) {
    out.samples.push_back(d.samples[i]);
  }
  return out;
}

Dataset SelectDays(const Dataset &d, std::span<const std::string> day_ids) {
  Dataset out = EmptyLike(d);
  for (const auto &s : d.samples) {
    if (std::find(day_ids.begin(), day_ids.end(), d.days[s.day]) != day_ids.end()) {
      out.samples.push_back(s);
    }
  }
  return out;
}

Result<Splits> SplitByDay(const Dataset &d, std::span<const std::string> train_days,
                          std::span<const std::string> val_days, std::span<const std::string> test_days) {
  std::set<std::string> seen;
  for (auto list : {train_days, val_days, test_days}) {
    for (const auto &day : list) {
      if (!seen.insert(day).second) {
        return MakeError(ErrorCode::kInvalidArgument, "day '" + day + "' assigned to more than one split");
      }
    }
  }
  return Splits{SelectDays(d, train_days), SelectDays(d, val_days), SelectDays(d, test_days)};
}

bool DaysDisjoint(std::span<const Dataset *const> parts) {
  std::set<std::string> seen;
  for (const Dataset *p : parts) {
    for (const auto &day : p->PresentDays()) {
      if (!seen.insert(day).second) {
        return false;
      }
    }
  }
  return true;
}

std::vector<nn::Tensor> MakeBatch(const Dataset &d, std::span<const std::size_t> indices) {
  std::vector<nn::Tensor> out;
  for (std::size_t b = 0; b < d.shapes.size(); ++b) {
    const auto &sh = d.shapes[b];
    nn::Tensor t({indices.size(), sh[0], sh[1], sh[2]});
    const std::size_t per = sh[0] * sh[1] * sh[2];
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const auto &img = d.samples[indices[i]].images[b];
      std::copy(img.begin(), img.end(), t.data.begin() + static_cast<std::ptrdiff_t>(i * per));
    }
    out.push_back(std::move(t));
  }
  return out;
}

} // namespace rfpresence::pipeline
