#include "rfpresence/pipeline/train.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "rfpresence/core/random.hpp"
#include "rfpresence/nn/loss.hpp"

namespace rfpresence::pipeline {

namespace {

constexpr std::size_t kEvalChunk = 256;

double Ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string Fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

} // namespace

void Confusion::Add(std::uint8_t truth, std::uint8_t predicted) {
  if (truth == 1) {
    (predicted == 1 ? tp : fn) += 1;
  } else {
    (predicted == 1 ? fp : tn) += 1;
  }
}

double Confusion::accuracy() const { return Ratio(tp + tn, total()); }
double Confusion::fpr() const { return Ratio(fp, fp + tn); }
double Confusion::fnr() const { return Ratio(fn, fn + tp); }

std::uint8_t DecideLabel(double p0, double p1) { return p1 > p0 ? 1 : 0; }

Result<nn::Model> Train(const Dataset &train, const Dataset *val, const TrainConfig &config, TrainReport *report,
                        const EpochCallback &on_epoch) {
  const auto start = std::chrono::steady_clock::now();
  if (train.samples.empty()) {
    return MakeError(ErrorCode::kInvalidArgument, "training split is empty");
  }
  if (train.CountLabel(0) == 0 || train.CountLabel(1) == 0) {
    return MakeError(ErrorCode::kSingleClassTrainingSet, "training split needs both labels (" +
                                                             std::to_string(train.CountLabel(0)) + " empty, " +
                                                             std::to_string(train.CountLabel(1)) + " motion)");
  }
  if (config.batch < 2 || config.epochs == 0) {
    return MakeError(ErrorCode::kInvalidArgument, "batch must be >= 2 and epochs >= 1");
  }
  auto spec = nn::ModelSpec::ForVariant(train.variant, train.shapes);
  if (!spec.ok()) {
    return spec.error();
  }
  auto model_r = nn::Model::Create(spec.value(), config.seed);
  if (!model_r.ok()) {
    return model_r.error();
  }
  nn::Model model = std::move(model_r).value();
  const auto params = model.Params();
  nn::AdamOptimizer adam(params, config.adam);

  TrainReport local;
  local.train_samples = train.size();
  local.train_positives = train.CountLabel(1);
  local.param_count = nn::CountParams(model.spec());

  std::mt19937_64 rng(DeriveSeed(config.seed, 3));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::uint8_t> labels;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(rng)]);
    }
    double loss_sum = 0.0;
    std::size_t batches = 0;
    std::size_t correct = 0;
    std::size_t seen = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch) {
      const std::size_t end = std::min(order.size(), begin + config.batch);
      if (end - begin < 2) {
        break;
      }
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const auto inputs = MakeBatch(train, idx);
      labels.resize(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        labels[i] = train.samples[idx[i]].label;
      }
      model.ZeroGrad();
      auto logits = model.Logits(inputs, nn::Mode::kTrain);
      if (!logits.ok()) {
        return logits.error();
      }
      const auto out = nn::SoftmaxCrossEntropy(logits.value(), labels);
      model.Backward(out.dlogits);
      nn::AddL2Gradient(params, config.l2);
      adam.Step();
      loss_sum += out.loss + nn::L2Penalty(params, config.l2);
      ++batches;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        correct += DecideLabel(out.probs.data[2 * i], out.probs.data[2 * i + 1]) == labels[i] ? 1 : 0;
      }
      seen += idx.size();
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
    rec.train_accuracy = Ratio(correct, seen);
    if (val != nullptr && !val->samples.empty()) {
      auto ev = Evaluate(model, *val);
      if (!ev.ok()) {
        return ev.error();
      }
      rec.val_accuracy = ev->overall.accuracy();
    }
    local.epochs.push_back(rec);
    if (on_epoch) {
      on_epoch(rec);
    }
  }
  model.QuantizeToFloat();
  local.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (report != nullptr) {
    *report = std::move(local);
  }
  return model;
}

Result<EvalReport> Evaluate(nn::Model &model, const Dataset &data) {
  if (data.variant != model.spec().variant) {
    return MakeError(ErrorCode::kVariantMismatch, "model is " + std::string(VariantName(model.spec().variant)) +
                                                      ", data is " + std::string(VariantName(data.variant)));
  }
  EvalReport report;
  report.p1.resize(data.size());
  report.predicted.resize(data.size());
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < data.size(); begin += kEvalChunk) {
    const std::size_t end = std::min(data.size(), begin + kEvalChunk);
    idx.resize(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    auto probs = model.Predict(MakeBatch(data, idx));
    if (!probs.ok()) {
      return probs.error();
    }
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const double p0 = probs->data[2 * i];
      const double p1 = probs->data[2 * i + 1];
      report.p1[begin + i] = p1;
      report.predicted[begin + i] = DecideLabel(p0, p1);
    }
  }
  std::vector<Confusion> per_day(data.days.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Sample &s = data.samples[i];
    per_day[s.day].Add(s.label, report.predicted[i]);
    report.overall.Add(s.label, report.predicted[i]);
  }
  for (std::size_t d = 0; d < data.days.size(); ++d) {
    if (per_day[d].total() > 0) {
      report.days.push_back({data.days[d], per_day[d]});
    }
  }
  return report;
}

std::string FormatEvalTable(const EvalReport &report) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %6s %6s %6s %6s %9s %7s %7s\n", "day", "TP", "FP", "TN", "FN", "accuracy",
                "FPR", "FNR");
  os << line;
  auto row = [&](const std::string &name, const Confusion &c) {
    std::snprintf(line, sizeof line, "%-12s %6zu %6zu %6zu %6zu %9.4f %7.4f %7.4f\n", name.c_str(), c.tp, c.fp, c.tn,
                  c.fn, c.accuracy(), c.fpr(), c.fnr());
    os << line;
  };
  for (const auto &d : report.days) {
    row(d.day_id, d.confusion);
  }
  row("all", report.overall);
  return os.str();
}

std::string FormatTrainRecords(const TrainReport &report) {
  std::ostringstream os;
  for (const auto &e : report.epochs) {
    os << "epoch=" << e.epoch << " loss=" << Fixed(e.loss, 6) << " train_acc=" << Fixed(e.train_accuracy);
    if (e.val_accuracy) {
      os << " val_acc=" << Fixed(*e.val_accuracy);
    }
    os << '\n';
  }
  os << "summary samples=" << report.train_samples << " positives=" << report.train_positives
     << " params=" << report.param_count << '\n';
  return os.str();
}

std::string FormatEvalRecords(const EvalReport &report) {
  std::ostringstream os;
  auto rec = [&](const std::string &name, const Confusion &c) {
    os << "day=" << name << " tp=" << c.tp << " fp=" << c.fp << " tn=" << c.tn << " fn=" << c.fn
       << " accuracy=" << Fixed(c.accuracy()) << " fpr=" << Fixed(c.fpr()) << " fnr=" << Fixed(c.fnr()) << '\n';
  };
  for (const auto &d : report.days) {
    rec(d.day_id, d.confusion);
  }
  rec("all", report.overall);
  return os.str();
}

} // namespace rfpresence::pipeline
