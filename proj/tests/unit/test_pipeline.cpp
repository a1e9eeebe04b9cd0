#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "fixtures.hpp"
#include "oracles/metrics_oracle.hpp"
#include "rfpresence/csi/stream_io.hpp"
#include "rfpresence/nn/model_io.hpp"
#include "rfpresence/pipeline/dataset.hpp"
#include "rfpresence/pipeline/train.hpp"
#include "rfpresence/synth/dataset_gen.hpp"

using namespace rfpresence;
using namespace rfpresence::pipeline;

namespace {

/// Produces random frames on demand so long streams need no storage.
class LazySource final : public csi::FrameSource {
 public:
  LazySource(csi::StreamHeader header, std::size_t count, std::uint64_t seed)
      : header_(std::move(header)), count_(count), rng_(seed) {}

  [[nodiscard]] const csi::StreamHeader &header() const override { return header_; }
  Result<std::optional<csi::CsiFrame>> Next() override {
    if (pos_ == count_) {
      return std::optional<csi::CsiFrame>{};
    }
    csi::CsiFrame f;
    f.timestamp_us = pos_ * 10'000;
    f.h = fixtures::RandomCoefficients(header_.shape.size(), rng_);
    ++pos_;
    return std::optional<csi::CsiFrame>(std::move(f));
  }

 private:
  csi::StreamHeader header_;
  std::size_t count_;
  std::size_t pos_{0};
  std::mt19937_64 rng_;
};

csi::StreamHeader Header(std::uint8_t label, std::string day) {
  csi::StreamHeader h;
  h.label = label;
  h.day_id = std::move(day);
  return h;
}

/// Random f32 images with the with-dft layout, alternating labels, spread over days.
Dataset FakeDataset(std::size_t count, const std::vector<std::string> &days, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  Dataset d;
  d.variant = Variant::kWithDft;
  d.shapes = {{50, 14, 9}, {50, 14, 6}};
  d.days = days;
  for (std::size_t i = 0; i < count; ++i) {
    Sample s;
    s.label = static_cast<std::uint8_t>(i % 2);
    s.day = static_cast<std::uint32_t>((i / 2) % days.size());
    for (const auto &shape : d.shapes) {
      std::vector<float> img(shape[0] * shape[1] * shape[2]);
      for (auto &v : img) {
        v = g(rng) + (s.label ? 0.5f : 0.0f);
      }
      s.images.push_back(std::move(img));
    }
    d.samples.push_back(std::move(s));
  }
  return d;
}

/// Small real dataset: a few windows per label from synthetic scenes.
Dataset SyntheticDataset(std::size_t scenes, std::size_t windows, std::uint64_t seed) {
  synth::DatasetGenConfig gen;
  gen.scenes = scenes;
  gen.windows_per_label = windows;
  gen.seed = seed;
  WindowingConfig wc;
  Dataset all;
  bool first = true;
  for (std::size_t s = 0; s < scenes; ++s) {
    auto streams = synth::MakeSceneStreams(gen, s);
    REQUIRE(streams.ok());
    for (csi::FrameSource *src : {static_cast<csi::FrameSource *>(streams->empty.get()),
                                  static_cast<csi::FrameSource *>(streams->motion.get())}) {
      auto part = BuildFromSource(*src, wc);
      REQUIRE(part.ok());
      if (first) {
        all = std::move(part.value());
        first = false;
      } else {
        all = Concat(all, part.value()).value();
      }
    }
  }
  return all;
}

std::vector<std::string> DayNames(const Dataset &d) {
  std::vector<std::string> out;
  for (const auto &s : d.samples) {
    out.push_back(d.DayOf(s));
  }
  return out;
}

} // namespace

TEST_CASE("non-overlapping windowing of a long labeled stream") {
  LazySource src(Header(1, "d00001"), 12'800, 1);
  BuildStats stats;
  auto d = BuildFromSource(src, WindowingConfig{}, &stats);
  REQUIRE(d.ok());
  CHECK(d->size() == 100);
  CHECK(d->size() <= 100);
  CHECK(stats.windows == 100);
  CHECK(stats.rejected == 0);
  CHECK(d->CountLabel(1) == 100);
  CHECK(d->PresentDays() == std::vector<std::string>{"d00001"});
  CHECK(d->shapes == std::vector<std::array<std::size_t, 3>>{{50, 14, 9}, {50, 14, 6}});
  CHECK(d->samples[0].images[0].size() == 50 * 14 * 9);

  // Stride 64 halves the step: (12800 - 128) / 64 + 1 windows.
  LazySource again(Header(1, "d00001"), 12'800, 1);
  WindowingConfig half;
  half.stride = 64;
  CHECK(BuildFromSource(again, half).value().size() == 199);
}

TEST_CASE("streams whose every window holds a zero frame yield no dataset") {
  const csi::CsiShape shape{};
  auto frames = fixtures::RandomFrames(shape, 1'280, 2);
  for (std::size_t i = 0; i < frames.size(); i += 2) {
    std::fill(frames[i].h.begin(), frames[i].h.end(), Complex(0.0, 0.0));
  }
  const std::string path = "pipeline_zero.csi";
  REQUIRE(csi::WriteStreamFile(path, Header(0, "d00009"), frames).ok());
  BuildStats stats;
  auto d = BuildDataset({path}, WindowingConfig{}, &stats);
  REQUIRE_FALSE(d.ok());
  CHECK(d.error().code == ErrorCode::kNoValidWindows);
  CHECK(stats.rejected == 10);
  CHECK(stats.reasons[ErrorCode::kZeroMagnitudeEntry] == 10);
  std::filesystem::remove(path);

  CHECK(BuildDataset({"pipeline_missing.csi"}, WindowingConfig{}).error().code == ErrorCode::kIoError);
}

TEST_CASE("irregular timestamps are rejected per window, not fatally") {
  const csi::CsiShape shape{};
  auto frames = fixtures::RandomFrames(shape, 384, 3);
  // Stretch the middle window past the span tolerance.
  for (std::size_t i = 128; i < frames.size(); ++i) {
    frames[i].timestamp_us += (std::min<std::size_t>(i, 255) - 128) * 1'000;
  }
  csi::VectorSource src(Header(0, "d00003"), frames);
  BuildStats stats;
  auto d = BuildFromSource(src, WindowingConfig{}, &stats);
  REQUIRE(d.ok());
  CHECK(d->size() == 2);
  CHECK(stats.reasons[ErrorCode::kSpanOutOfTolerance] == 1);
}

TEST_CASE("splits assign whole days and stay disjoint") {
  const Dataset d = FakeDataset(60, {"a", "b", "c", "d", "e"}, 4);
  const std::vector<std::string> train{"a", "b"}, val{"c"}, test{"d", "e"};
  auto s = SplitByDay(d, train, val, test);
  REQUIRE(s.ok());
  CHECK(s->train.size() + s->val.size() + s->test.size() == d.size());
  const Dataset *parts[] = {&s->train, &s->val, &s->test};
  CHECK(DaysDisjoint(parts));
  for (const auto &day : DayNames(s->test)) {
    CHECK((day == "d" || day == "e"));
  }

  const Dataset *overlapping[] = {&s->train, &d};
  CHECK_FALSE(DaysDisjoint(overlapping));

  const std::vector<std::string> dup{"a"};
  CHECK(SplitByDay(d, train, dup, test).error().code == ErrorCode::kInvalidArgument);
}

TEST_CASE("subsampling is reproducible and keeps order") {
  const Dataset d = FakeDataset(80, {"a", "b"}, 5);
  const Dataset x = Subsample(d, 30, 9);
  const Dataset y = Subsample(d, 30, 9);
  const Dataset z = Subsample(d, 30, 10);
  REQUIRE(x.size() == 30);
  bool same = true, differs = false;
  for (std::size_t i = 0; i < 30; ++i) {
    same = same && x.samples[i].images == y.samples[i].images;
    differs = differs || x.samples[i].images != z.samples[i].images;
  }
  CHECK(same);
  CHECK(differs);

  // Original order: each kept sample appears later in the source than the previous one.
  std::size_t cursor = 0;
  for (const auto &s : x.samples) {
    while (cursor < d.size() && d.samples[cursor].images != s.images) {
      ++cursor;
    }
    CHECK(cursor < d.size());
    ++cursor;
  }

  // Augmentation: concatenation then subsampling keeps both sources' days.
  Dataset other = FakeDataset(20, {"c"}, 6);
  const Dataset joined = Concat(d, other).value();
  CHECK(joined.size() == 100);
  CHECK(joined.PresentDays() == std::vector<std::string>{"a", "b", "c"});
  CHECK(Subsample(joined, 100, 1).size() == 100);
}

TEST_CASE("confusion metrics") {
  Confusion all_zero;
  for (int i = 0; i < 10; ++i) {
    all_zero.Add(static_cast<std::uint8_t>(i % 2), 0);
  }
  CHECK(all_zero.accuracy() == 0.5);
  CHECK(all_zero.fpr() == 0.0);
  CHECK(all_zero.fnr() == 1.0);

  Confusion perfect;
  for (int i = 0; i < 10; ++i) {
    perfect.Add(static_cast<std::uint8_t>(i % 3 == 0), static_cast<std::uint8_t>(i % 3 == 0));
  }
  CHECK(perfect.accuracy() == 1.0);
  CHECK(perfect.total() == 10);

  CHECK(DecideLabel(0.5, 0.5) == 0);
  CHECK(DecideLabel(0.49, 0.51) == 1);
  CHECK(DecideLabel(0.51, 0.49) == 0);
}

TEST_CASE("evaluation equals an independent recount and ignores sample order") {
  Dataset d = FakeDataset(90, {"x", "y", "z"}, 7);
  const std::array<std::size_t, 3> shapes[] = {{50, 14, 9}, {50, 14, 6}};
  auto model = nn::Model::Create(nn::ModelSpec::ForVariant(Variant::kWithDft, shapes).value(), 8);
  REQUIRE(model.ok());
  auto report = Evaluate(model.value(), d);
  REQUIRE(report.ok());
  REQUIRE(report->p1.size() == d.size());

  std::vector<int> truth, pred;
  for (std::size_t i = 0; i < d.size(); ++i) {
    truth.push_back(d.samples[i].label);
    pred.push_back(report->predicted[i]);
    CHECK(report->predicted[i] == DecideLabel(1.0 - report->p1[i], report->p1[i]));
  }
  const auto recount = oracle::Recount(DayNames(d), truth, pred);
  REQUIRE(report->days.size() == 3);
  std::size_t total = 0;
  for (const auto &day : report->days) {
    const auto &c = recount.at(day.day_id);
    CHECK(day.confusion.tp == c.tp);
    CHECK(day.confusion.fp == c.fp);
    CHECK(day.confusion.tn == c.tn);
    CHECK(day.confusion.fn == c.fn);
    CHECK(day.confusion.accuracy() == doctest::Approx(c.accuracy()));
    total += day.confusion.total();
  }
  CHECK(total == d.size());
  CHECK(report->overall.total() == d.size());

  std::mt19937_64 rng(9);
  std::shuffle(d.samples.begin(), d.samples.end(), rng);
  auto shuffled = Evaluate(model.value(), d);
  REQUIRE(shuffled.ok());
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(shuffled->days[i].day_id == report->days[i].day_id);
    CHECK(shuffled->days[i].confusion == report->days[i].confusion);
  }
  CHECK(shuffled->overall == report->overall);
}

TEST_CASE("training needs both labels") {
  Dataset d = FakeDataset(20, {"a"}, 10);
  std::erase_if(d.samples, [](const Sample &s) { return s.label == 1; });
  TrainConfig cfg;
  cfg.epochs = 1;
  CHECK(Train(d, nullptr, cfg).error().code == ErrorCode::kSingleClassTrainingSet);
}

TEST_CASE("training is deterministic and learns a synthetic scene") {
  const Dataset d = SyntheticDataset(2, 24, 11);
  REQUIRE(d.size() == 96);
  CHECK(d.CountLabel(1) == 48);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch = 16;
  cfg.seed = 3;
  TrainReport r1;
  auto m1 = Train(d, &d, cfg, &r1);
  REQUIRE(m1.ok());
  auto m2 = Train(d, nullptr, cfg);
  REQUIRE(m2.ok());
  KeyValueConfig meta;
  CHECK(nn::EncodeModel(m1.value(), meta) == nn::EncodeModel(m2.value(), meta));

  REQUIRE(r1.epochs.size() == 4);
  CHECK(r1.epochs[0].epoch == 1);
  CHECK(r1.epochs.back().val_accuracy.has_value());
  CHECK(r1.train_samples == 96);
  CHECK(r1.train_positives == 48);
  CHECK(r1.param_count == nn::CountParams(m1->spec()));
  CHECK(r1.epochs.back().loss < r1.epochs.front().loss);
  auto eval = Evaluate(m1.value(), d);
  REQUIRE(eval.ok());
  CHECK(eval->overall.accuracy() >= 0.9);

  cfg.seed = 4;
  auto m3 = Train(d, nullptr, cfg);
  REQUIRE(m3.ok());
  CHECK(nn::EncodeModel(m1.value(), meta) != nn::EncodeModel(m3.value(), meta));

  const std::string records = FormatTrainRecords(r1);
  CHECK(records.find("epoch=1") != std::string::npos);
  CHECK(FormatEvalTable(eval.value()).find("day-01") != std::string::npos);
}
