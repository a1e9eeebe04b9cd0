#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rfpresence/core/result.hpp"
#include "rfpresence/nn/adam.hpp"
#include "rfpresence/nn/model.hpp"
#include "rfpresence/pipeline/dataset.hpp"

namespace rfpresence::pipeline {

struct TrainConfig {
  std::size_t epochs{10};
  std::size_t batch{64};
  nn::AdamConfig adam{};
  double l2{1e-4};
  std::uint64_t seed{1};
};

struct EpochRecord {
  std::size_t epoch{0};  // 1-based
  double loss{0.0};      // mean over batches, including the weight penalty
  double train_accuracy{0.0};  // running, train-mode forward
  std::optional<double> val_accuracy;
};

struct Confusion {
  std::size_t tp{0};
  std::size_t fp{0};
  std::size_t tn{0};
  std::size_t fn{0};

  void Add(std::uint8_t truth, std::uint8_t predicted);
  [[nodiscard]] std::size_t total() const { return tp + fp + tn + fn; }
  [[nodiscard]] double accuracy() const;
  /// FP / (FP + TN); 0 when there are no negatives.
  [[nodiscard]] double fpr() const;
  /// FN / (FN + TP); 0 when there are no positives.
  [[nodiscard]] double fnr() const;
  bool operator==(const Confusion &) const = default;
};

struct DayMetrics {
  std::string day_id;
  Confusion confusion;
};

struct EvalReport {
  std::vector<DayMetrics> days;  // in dataset day-table order
  Confusion overall;
  std::vector<double> p1;               // per-sample probability of label 1
  std::vector<std::uint8_t> predicted;  // per-sample argmax, ties to 0
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t train_samples{0};
  std::size_t train_positives{0};
  std::size_t param_count{0};
  std::vector<DayMetrics> test_days;
  double seconds{0.0};
};

using EpochCallback = std::function<void(const EpochRecord &)>;

/// Adam on mean cross-entropy plus the FC weight penalty. Samples are shuffled
/// per epoch from the seed; a trailing batch of one sample is dropped because
/// train-mode batch norm needs two. The returned model is rounded to f32 so it
/// matches its saved form.
Result<nn::Model> Train(const Dataset &train, const Dataset *val, const TrainConfig &config,
                        TrainReport *report = nullptr, const EpochCallback &on_epoch = {});

/// Label 1 iff p1 > p0.
std::uint8_t DecideLabel(double p0, double p1);

/// Infer-mode evaluation grouped by day.
Result<EvalReport> Evaluate(nn::Model &model, const Dataset &data);

/// Per-day table for humans.
std::string FormatEvalTable(const EvalReport &report);
/// One "key=value ..." record per epoch and per day, for plotting.
std::string FormatTrainRecords(const TrainReport &report);
std::string FormatEvalRecords(const EvalReport &report);

} // namespace rfpresence::pipeline
