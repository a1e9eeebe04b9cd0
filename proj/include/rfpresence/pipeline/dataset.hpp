#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rfpresence/core/result.hpp"
#include "rfpresence/core/variant.hpp"
#include "rfpresence/csi/stream_io.hpp"
#include "rfpresence/dsp/preprocess.hpp"
#include "rfpresence/nn/tensor.hpp"

namespace rfpresence::pipeline {

/// One pre-processed window. images[b] holds branch b's H x W x C image as f32.
struct Sample {
  std::vector<std::vector<float>> images;
  std::uint8_t label{0};
  std::uint32_t day{0};  // index into Dataset::days
};

struct Dataset {
  Variant variant{Variant::kWithDft};
  std::vector<std::array<std::size_t, 3>> shapes;  // per branch
  std::vector<std::string> days;                   // day_id table
  std::vector<Sample> samples;

  [[nodiscard]] std::size_t size() const { return samples.size(); }
  [[nodiscard]] std::size_t CountLabel(std::uint8_t label) const;
  [[nodiscard]] const std::string &DayOf(const Sample &s) const { return days[s.day]; }
  /// Day ids that own at least one sample, in table order.
  [[nodiscard]] std::vector<std::string> PresentDays() const;
  /// Appends a sample from another dataset with the same layout, remapping its day.
  void AddFrom(const Dataset &other, const Sample &s);
};

struct WindowingConfig {
  dsp::PreprocessConfig preprocess{};
  std::size_t stride{csi::kDefaultWindowFrames};  // non-overlapping by default
  double interval_ms{csi::kDefaultIntervalMs};
};

struct BuildStats {
  std::size_t windows{0};
  std::size_t rejected{0};
  std::map<ErrorCode, std::size_t> reasons;

  void Merge(const BuildStats &o);
};

/// Windows a labeled source with the configured stride, validates and
/// pre-processes each window. Rejected windows are counted, not fatal.
Result<Dataset> BuildFromSource(csi::FrameSource &source, const WindowingConfig &config, BuildStats *stats = nullptr);

/// Builds every file (in parallel) and concatenates in argument order.
/// NoValidWindows if nothing survives validation.
Result<Dataset> BuildDataset(const std::vector<std::string> &files, const WindowingConfig &config,
                             BuildStats *stats = nullptr);

/// Concatenation; both datasets must share variant and shapes.
Result<Dataset> Concat(const Dataset &a, const Dataset &b);

/// `count` samples drawn without replacement, reproducible from `seed`,
/// kept in their original order.
Dataset Subsample(const Dataset &d, std::size_t count, std::uint64_t seed);

/// Samples whose day is in `day_ids`.
Dataset SelectDays(const Dataset &d, std::span<const std::string> day_ids);

struct Splits {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Assigns whole days to splits. InvalidArgument if a day is listed twice.
Result<Splits> SplitByDay(const Dataset &d, std::span<const std::string> train_days,
                          std::span<const std::string> val_days, std::span<const std::string> test_days);

/// True when no day id owns samples in more than one of the datasets.
bool DaysDisjoint(std::span<const Dataset *const> parts);

/// Batched f64 tensors (N x H x W x C per branch) for the given sample indices.
std::vector<nn::Tensor> MakeBatch(const Dataset &d, std::span<const std::size_t> indices);

} // namespace rfpresence::pipeline
