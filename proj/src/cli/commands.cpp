#include "rfpresence/cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "rfpresence/csi/stream_io.hpp"
#include "rfpresence/detect/detector.hpp"
#include "rfpresence/nn/model_io.hpp"
#include "rfpresence/pipeline/train.hpp"
#include "rfpresence/synth/dataset_gen.hpp"

namespace rfpresence::cli {

namespace {

/// Typed reads that remember the first parse error.
class Fields {
 public:
  explicit Fields(const KeyValueConfig &kv) : kv_(kv) {}

  double Double(std::string_view key, double fallback) {
    auto v = kv_.GetDouble(key, fallback);
    return Keep(v, fallback);
  }
  std::size_t Size(std::string_view key, std::size_t fallback) {
    auto v = kv_.GetInt(key, static_cast<std::int64_t>(fallback));
    const std::int64_t got = Keep(v, static_cast<std::int64_t>(fallback));
    if (got < 0) {
      Fail(MakeError(ErrorCode::kInvalidArgument, "key '" + std::string(key) + "' must not be negative"));
      return fallback;
    }
    return static_cast<std::size_t>(got);
  }
  std::uint64_t U64(std::string_view key, std::uint64_t fallback) {
    const auto raw = kv_.Get(key);
    if (!raw) {
      return fallback;
    }
    std::uint64_t v = 0;
    const char *end = raw->data() + raw->size();
    const auto [ptr, ec] = std::from_chars(raw->data(), end, v);
    if (ec != std::errc{} || ptr != end) {
      Fail(MakeError(ErrorCode::kParseError, "key '" + std::string(key) + "' is not an unsigned integer: '" + *raw +
                                                 "'"));
      return fallback;
    }
    return v;
  }
  std::string String(std::string_view key, std::string fallback = {}) { return kv_.GetString(key, fallback); }
  std::string Required(std::string_view key) {
    auto v = kv_.Get(key);
    if (!v || v->empty()) {
      Fail(MakeError(ErrorCode::kInvalidArgument, "missing required setting '" + std::string(key) + "'"));
      return {};
    }
    return *v;
  }
  Variant VariantOr(Variant fallback) {
    const auto raw = kv_.Get("variant");
    if (!raw) {
      return fallback;
    }
    auto v = ParseVariant(*raw);
    if (!v) {
      Fail(MakeError(ErrorCode::kInvalidArgument, "unknown variant '" + *raw + "'"));
      return fallback;
    }
    return *v;
  }

  void Fail(Error e) {
    if (!error_) {
      error_ = std::move(e);
    }
  }
  [[nodiscard]] Status status() const { return error_ ? Status(*error_) : Status(); }

 private:
  template <typename T>
  T Keep(const Result<T> &r, T fallback) {
    if (!r.ok()) {
      Fail(r.error());
      return fallback;
    }
    return r.value();
  }

  const KeyValueConfig &kv_;
  std::optional<Error> error_;
};

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string JoinList(const std::vector<std::string> &items) {
  std::string out;
  for (const auto &s : items) {
    if (!out.empty()) {
      out += ',';
    }
    out += s;
  }
  return out;
}

/// Window and pre-processing settings shared by train, eval and detect.
struct WindowSettings {
  Variant variant{Variant::kWithDft};
  std::size_t frames{csi::kDefaultWindowFrames};
  std::size_t n_f{csi::kDefaultSelectedSubcarriers};
  std::size_t crop{dsp::kDefaultCrop};
  double interval_ms{csi::kDefaultIntervalMs};
  std::size_t stride{csi::kDefaultWindowFrames};

  void Read(Fields &f) {
    variant = f.VariantOr(variant);
    frames = f.Size("frames", frames);
    n_f = f.Size("n_f", n_f);
    crop = f.Size("crop", crop);
    interval_ms = f.Double("interval_ms", interval_ms);
    stride = f.Size("stride", stride);
  }
  void Write(KeyValueConfig &kv) const {
    kv.Set("variant", std::string(VariantName(variant)));
    kv.Set("frames", std::to_string(frames));
    kv.Set("n_f", std::to_string(n_f));
    kv.Set("crop", std::to_string(crop));
    kv.Set("interval_ms", FormatDouble(interval_ms));
    kv.Set("stride", std::to_string(stride));
  }
  [[nodiscard]] pipeline::WindowingConfig Windowing() const {
    pipeline::WindowingConfig wc;
    wc.preprocess.frames = frames;
    wc.preprocess.n_f = n_f;
    wc.preprocess.crop = crop;
    wc.preprocess.variant = variant;
    wc.stride = stride;
    wc.interval_ms = interval_ms;
    return wc;
  }
};

/// The leading "# key = value" lines written by WriteWithConfig.
Result<KeyValueConfig> EmbeddedConfig(const std::string &path) {
  std::ifstream in(path);
  std::string header;
  for (std::string line; std::getline(in, line) && line.starts_with("# ");) {
    header += line.substr(2) + "\n";
  }
  return KeyValueConfig::Parse(header, path);
}

std::string CommentBlock(const KeyValueConfig &run) {
  std::string out;
  for (const auto &[k, v] : run.entries()) {
    out += "# " + k + " = " + v + "\n";
  }
  return out;
}

std::string ReasonSummary(const pipeline::BuildStats &stats) {
  std::string out;
  for (const auto &[code, n] : stats.reasons) {
    out += " " + std::string(ErrorCodeName(code)) + "=" + std::to_string(n);
  }
  return out;
}

Status WriteText(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    return MakeError(ErrorCode::kIoError, "cannot open '" + path + "' for writing");
  }
  out << text;
  out.flush();
  if (!out) {
    return MakeError(ErrorCode::kIoError, "write to '" + path + "' failed");
  }
  return {};
}

/// Starts a canonical configuration: the command, then every assignment of
/// `keys` from the run in key order. Unknown run keys are dropped so replaying
/// an artifact's configuration reproduces the same configuration.
KeyValueConfig Canonical(const std::string &command, const KeyValueConfig &run,
                         std::initializer_list<std::string_view> keys) {
  KeyValueConfig out;
  out.Set("command", command);
  for (const auto key : keys) {
    for (auto &v : run.GetAll(key)) {
      out.Add(std::string(key), std::move(v));
    }
  }
  return out;
}

/// The model's own pre-processing settings; run keys override them.
WindowSettings SettingsFromModel(const nn::LoadedModel &loaded, Fields &f) {
  WindowSettings w;
  Fields meta(loaded.metadata);
  w.Read(meta);
  w.variant = loaded.model.spec().variant;
  if (auto st = meta.status(); !st.ok()) {
    f.Fail(st.error());
  }
  // The run may still override; a differing variant surfaces as VariantMismatch.
  w.Read(f);
  return w;
}

/// Writes the classifier inputs of the first valid windows as a tensor dump.
Status DumpTensors(csi::StreamReader &reader, const KeyValueConfig &run, std::ostream &log) {
  Fields f(run);
  WindowSettings w;
  w.Read(f);
  const std::string out_path = f.Required("tensors");
  const std::size_t wanted = f.Size("windows", 1);
  if (auto st = f.status(); !st.ok()) {
    return st.error();
  }
  const csi::StreamHeader &h = reader.header();
  pipeline::WindowingConfig wc = w.Windowing();
  wc.preprocess.n_r = h.shape.n_r;
  wc.preprocess.n_t = h.shape.n_t;
  auto pre = dsp::Preprocessor::Create(wc.preprocess);
  if (!pre.ok()) {
    return pre.error();
  }
  const csi::WindowSpec spec = csi::WindowSpec::ForInterval(wc.interval_ms, wc.preprocess.frames);
  std::vector<std::uint8_t> bytes;
  std::vector<csi::CsiFrame> window;
  std::size_t written = 0;
  std::size_t skip = 0;
  while (written < wanted) {
    auto frame = reader.Next();
    if (!frame.ok()) {
      return frame.error();
    }
    if (!frame.value()) {
      break;
    }
    if (skip > 0) {
      --skip;
      continue;
    }
    window.push_back(std::move(*frame.value()));
    if (window.size() < spec.frames) {
      continue;
    }
    auto valid = csi::ValidateWindow(window, h.shape, spec);
    if (valid.ok()) {
      auto input = pre->FromWindow(valid.value());
      if (!input.ok()) {
        return input.error();
      }
      auto encoded = dsp::EncodeTensorDump(input.value());
      if (!encoded.ok()) {
        return encoded.error();
      }
      bytes.insert(bytes.end(), encoded->begin(), encoded->end());
      ++written;
    }
    // Advance by the stride.
    if (wc.stride >= window.size()) {
      skip = wc.stride - window.size();
      window.clear();
    } else {
      window.erase(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(wc.stride));
    }
  }
  std::ofstream out(out_path, std::ios::binary);
  out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    return MakeError(ErrorCode::kIoError, "cannot write '" + out_path + "'");
  }
  log << "wrote " << written << " window(s) of " << VariantName(w.variant) << " inputs to " << out_path << "\n";
  return {};
}

} // namespace

std::vector<std::string> SplitList(const std::string &text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) {
      continue;
    }
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

Result<std::vector<std::pair<double, double>>> ParseIntervals(const std::string &text) {
  std::vector<std::pair<double, double>> out;
  for (const auto &item : SplitList(text)) {
    const auto dash = item.find('-', 1);
    if (dash == std::string::npos) {
      return MakeError(ErrorCode::kParseError, "interval '" + item + "' is not of the form begin-end");
    }
    try {
      std::size_t u1 = 0;
      std::size_t u2 = 0;
      const std::string a = item.substr(0, dash);
      const std::string b = item.substr(dash + 1);
      const double lo = std::stod(a, &u1);
      const double hi = std::stod(b, &u2);
      if (u1 != a.size() || u2 != b.size() || !(hi > lo) || lo < 0.0) {
        throw std::invalid_argument("bad interval");
      }
      out.emplace_back(lo, hi);
    } catch (const std::exception &) {
      return MakeError(ErrorCode::kParseError, "interval '" + item + "' is not of the form begin-end");
    }
  }
  return out;
}

Result<std::vector<std::string>> ExpandDataPaths(const std::vector<std::string> &entries) {
  std::vector<std::string> out;
  for (const auto &entry : entries) {
    std::error_code ec;
    if (std::filesystem::is_directory(entry, ec)) {
      std::vector<std::string> found;
      for (const auto &de : std::filesystem::directory_iterator(entry, ec)) {
        if (de.is_regular_file() && de.path().extension() == ".csi") {
          found.push_back(de.path().string());
        }
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else if (std::filesystem::is_regular_file(entry, ec)) {
      out.push_back(entry);
    } else {
      return MakeError(ErrorCode::kIoError, "input '" + entry + "' does not exist");
    }
  }
  if (out.empty()) {
    return MakeError(ErrorCode::kInvalidArgument, "no input stream files given");
  }
  return out;
}

Status WriteWithConfig(const std::string &path, const KeyValueConfig &run, const std::string &body) {
  return WriteText(path, CommentBlock(run) + body);
}

Result<KeyValueConfig> MergeConfig(const std::optional<std::string> &config_path, const KeyValueConfig &flags) {
  KeyValueConfig merged;
  if (config_path) {
    auto file = KeyValueConfig::Load(*config_path);
    if (!file.ok() && file.error().code != ErrorCode::kParseError) {
      return file.error();
    }
    if (file.ok() && file->Has("command")) {
      merged = std::move(file).value();
    } else if (auto embedded = EmbeddedConfig(*config_path); embedded.ok() && embedded->Has("command")) {
      // An artifact: replay the configuration embedded in its comment header.
      merged = std::move(embedded).value();
    } else if (!file.ok()) {
      return file.error();
    } else {
      merged = std::move(file).value();
    }
  }
  std::set<std::string> overridden;
  for (const auto &[k, v] : flags.entries()) {
    if (overridden.insert(k).second) {
      merged.Erase(k);
    }
    merged.Add(k, v);
  }
  return merged;
}

Status RunCommand(const KeyValueConfig &run, std::ostream &log) {
  const std::string cmd = run.GetString("command", "");
  if (cmd == "simulate") {
    return Simulate(run, log);
  }
  if (cmd == "import") {
    return Import(run, log);
  }
  if (cmd == "train") {
    return TrainCommand(run, log);
  }
  if (cmd == "eval") {
    return EvalCommand(run, log);
  }
  if (cmd == "detect") {
    return Detect(run, log);
  }
  if (cmd == "dump") {
    return Dump(run, log);
  }
  return MakeError(ErrorCode::kInvalidArgument, "unknown command '" + cmd + "'");
}

// ---- simulate ----------------------------------------------------------------

Status Simulate(const KeyValueConfig &run, std::ostream &log) {
  Fields f(run);
  synth::DatasetGenConfig gen;
  // Scene keys share the run configuration with the command's own keys.
  KeyValueConfig scene_keys;
  const KeyValueConfig defaults = synth::SceneConfig{}.ToConfig();
  for (const auto &[k, v] : run.entries()) {
    if (k != "seed" && k != "frames" && defaults.Has(k)) {
      scene_keys.Set(k, v);
    }
  }
  auto scene = synth::SceneConfig::FromConfig(scene_keys);
  if (!scene.ok()) {
    return scene.error();
  }
  gen.scene = scene.value();
  gen.seed = f.U64("seed", gen.seed);
  gen.scenes = f.Size("scenes", gen.scenes);
  gen.windows_per_label = f.Size("windows", gen.windows_per_label);
  gen.window_frames = f.Size("frames", gen.window_frames);
  gen.scene.interval_ms = f.Double("interval_ms", gen.scene.interval_ms);
  gen.shape.n_sc = static_cast<std::uint16_t>(f.Size("n_sc", gen.shape.n_sc));
  gen.shape.n_r = static_cast<std::uint16_t>(f.Size("n_r", gen.shape.n_r));
  gen.shape.n_t = static_cast<std::uint16_t>(f.Size("n_t", gen.shape.n_t));
  const double duration = f.Double("duration", 0.0);
  if (auto st = f.status(); !st.ok()) {
    return st.error();
  }

  KeyValueConfig resolved =
      Canonical("simulate", run, {"out_dir", "scenes", "windows", "output", "duration", "motion", "scene_index"});
  resolved.Set("seed", std::to_string(gen.seed));
  resolved.Set("frames", std::to_string(gen.window_frames));
  resolved.Set("interval_ms", FormatDouble(gen.scene.interval_ms));
  resolved.Set("n_sc", std::to_string(gen.shape.n_sc));
  resolved.Set("n_r", std::to_string(gen.shape.n_r));
  resolved.Set("n_t", std::to_string(gen.shape.n_t));
  const KeyValueConfig scene_resolved = gen.scene.ToConfig();
  for (const auto &[k, v] : scene_resolved.entries()) {
    if (k != "seed" && k != "frames" && k != "interval_ms") {
      resolved.Set(k, v);
    }
  }

  if (duration > 0.0) {
    // Single unlabeled stream with motion only inside the scheduled intervals.
    const std::string output = f.Required("output");
    const std::size_t scene_index = f.Size("scene_index", 0);
    const std::uint64_t stream_seed = f.U64("stream_seed", gen.seed);
    auto intervals = ParseIntervals(f.String("motion"));
    if (auto st = f.status(); !st.ok()) {
      return st.error();
    }
    if (!intervals.ok()) {
      return intervals.error();
    }
    std::vector<synth::Interval> motion;
    for (const auto &[a, b] : intervals.value()) {
      motion.push_back({a, b});
    }
    auto src = synth::MakeScheduledStream(gen, scene_index, duration, motion, stream_seed);
    if (!src.ok()) {
      return src.error();
    }
    auto writer = csi::StreamWriter::Open(output, src.value()->header());
    if (!writer.ok()) {
      return writer.error();
    }
    std::size_t n = 0;
    while (true) {
      auto frame = src.value()->Next();
      if (!frame.ok()) {
        return frame.error();
      }
      if (!frame.value()) {
        break;
      }
      if (auto st = writer.value()->Append(*frame.value()); !st.ok()) {
        return st.error();
      }
      ++n;
    }
    if (auto st = writer.value()->Close(); !st.ok()) {
      return st.error();
    }
    resolved.Set("duration", FormatDouble(duration));
    resolved.Set("scene_index", std::to_string(scene_index));
    resolved.Set("stream_seed", std::to_string(stream_seed));
    log << "wrote " << output << " (" << n << " frames)\n";
    return WriteText(output + ".manifest.txt", resolved.Serialize());
  }

  const std::string out_dir = f.Required("out_dir");
  if (auto st = f.status(); !st.ok()) {
    return st.error();
  }
  resolved.Set("scenes", std::to_string(gen.scenes));
  resolved.Set("windows", std::to_string(gen.windows_per_label));
  auto files = synth::GenerateDataset(gen, out_dir);
  if (!files.ok()) {
    return files.error();
  }
  KeyValueConfig manifest = resolved;
  for (const auto &file : files.value()) {
    manifest.Add("file", std::filesystem::path(file.path).filename().string());
    log << "wrote " << file.path << " (day " << file.day_id << ", label " << int{file.label} << ", "
        << file.frames << " frames)\n";
  }
  return WriteText((std::filesystem::path(out_dir) / "manifest.txt").string(), manifest.Serialize());
}

// ---- import ------------------------------------------------------------------

Status Import(const KeyValueConfig &run, std::ostream &log) {
  Fields f(run);
  const std::string input = f.Required("input");
  const std::string output = f.Required("output");
  if (auto st = f.status(); !st.ok()) {
    return st.error();
  }
  std::ifstream in(input, std::ios::binary);
  if (!in) {
    return MakeError(ErrorCode::kIoError, "cannot open '" + input + "'");
  }
  auto n = csi::ImportJsonLines(in, input, output);
  if (!n.ok()) {
    return n.error();
  }
  log << "imported " << n.value() << " frames into " << output << "\n";
  const KeyValueConfig resolved = Canonical("import", run, {"input", "output"});
  return WriteText(output + ".manifest.txt", resolved.Serialize());
}

// ---- train -------------------------------------------------------------------

Status TrainCommand(const KeyValueConfig &run, std::ostream &log) {
  Fields f(run);
  WindowSettings w;
  w.Read(f);
  pipeline::TrainConfig tc;
  tc.seed = f.U64("seed", tc.seed);
  tc.epochs = f.Size("epochs", tc.epochs);
  tc.batch = f.Size("batch", tc.batch);
  tc.adam.lr = f.Double("lr", tc.adam.lr);
  tc.l2 = f.Double("l2", tc.l2);
  const std::string output = f.Required("output");
  const auto train_days = SplitList(f.String("train_days"));
  const auto val_days = SplitList(f.String("val_days"));
  const auto test_days = SplitList(f.String("test_days"));
  if (auto st = f.status(); !st.ok()) {
    return st.error();
  }
  auto files = ExpandDataPaths(run.GetAll("data"));
  if (!files.ok()) {
    return files.error();
  }

  pipeline::BuildStats stats;
  auto data = pipeline::BuildDataset(files.value(), w.Windowing(), &stats);
  if (!data.ok()) {
    return data.error();
  }
  log << "windows " << stats.windows << " rejected " << stats.rejected << ReasonSummary(stats) << "\n";

  std::vector<std::string> train = train_days;
  if (train.empty()) {
    for (const auto &d : data->PresentDays()) {
      const bool held = std::find(val_days.begin(), val_days.end(), d) != val_days.end() ||
                        std::find(test_days.begin(), test_days.end(), d) != test_days.end();
      if (!held) {
        train.push_back(d);
      }
    }
  }
  auto splits = pipeline::SplitByDay(data.value(), train, val_days, test_days);
  if (!splits.ok()) {
    return splits.error();
  }
  log << "train days " << JoinList(train) << ": " << splits->train.size() << " samples ("
      << splits->train.CountLabel(1) << " positive)\n";

  KeyValueConfig resolved = Canonical("train", run, {"data", "output", "val_days", "test_days"});
  w.Write(resolved);
  resolved.Set("seed", std::to_string(tc.seed));
  resolved.Set("epochs", std::to_string(tc.epochs));
  resolved.Set("batch", std::to_string(tc.batch));
  resolved.Set("lr", FormatDouble(tc.adam.lr));
  resolved.Set("l2", FormatDouble(tc.l2));
  resolved.Set("train_days", JoinList(train));

  pipeline::TrainReport report;
  const pipeline::Dataset *val = splits->val.size() > 0 ? &splits->val : nullptr;
  auto model = pipeline::Train(splits->train, val, tc, &report, [&](const pipeline::EpochRecord &e) {
    log << "epoch " << e.epoch << " loss " << e.loss << " train_acc " << e.train_accuracy;
    if (e.val_accuracy) {
      log << " val_acc " << *e.val_accuracy;
    }
    log << "\n";
  });
  if (!model.ok()) {
    return model.error();
  }

  std::string table;
  if (splits->test.size() > 0) {
    auto ev = pipeline::Evaluate(model.value(), splits->test);
    if (!ev.ok()) {
      return ev.error();
    }
    report.test_days = ev->days;
    table = pipeline::FormatEvalTable(ev.value());
    log << table;
  }

  if (auto st = nn::SaveModel(output, model.value(), resolved); !st.ok()) {
    return st.error();
  }
  KeyValueConfig manifest = resolved;
  for (const auto &file : files.value()) {
    manifest.Add("split.file", file);
  }
  manifest.Set("split.val_days", JoinList(val_days));
  manifest.Set("split.test_days", JoinList(test_days));
  if (auto st = WriteText(output + ".manifest.txt", manifest.Serialize()); !st.ok()) {
    return st;
  }
  std::string human;
  char line[160];
  std::snprintf(line, sizeof line, "%6s %10s %10s %10s\n", "epoch", "loss", "train_acc", "val_acc");
  human += line;
  for (const auto &e : report.epochs) {
    std::snprintf(line, sizeof line, "%6zu %10.5f %10.4f %10s\n", e.epoch, e.loss, e.train_accuracy,
                  e.val_accuracy ? FormatDouble(*e.val_accuracy).substr(0, 6).c_str() : "-");
    human += line;
  }
  human += "parameters " + std::to_string(report.param_count) + ", train samples " +
           std::to_string(report.train_samples) + "\n";
  human += table;
  if (auto st = WriteWithConfig(output + ".report.txt", resolved, human); !st.ok()) {
    return st;
  }
  if (auto st = WriteWithConfig(output + ".records.txt", resolved, pipeline::FormatTrainRecords(report)); !st.ok()) {
    return st;
  }
  // Wall time goes to the log only, so replayed runs write identical files.
  char took[64];
  std::snprintf(took, sizeof took, "trained in %.1f s\n", report.seconds);
  log << took << "wrote " << output << "\n";
  return {};
}

// ---- eval --------------------------------------------------------------------

Status EvalCommand(const KeyValueConfig &run, std::ostream &log) {
  Fields f(run);
  const std::string model_path = f.Required("model");
  if (auto st = f.status(); !st.ok()) {
    return st.error();
  }
  auto loaded = nn::LoadModel(model_path);
  if (!loaded.ok()) {
    return loaded.error();
  }
  WindowSettings w = SettingsFromModel(loaded.value(), f);
  const auto days = SplitList(f.String("days"));
  const std::string report_path = f.String("report");
  if (auto st = f.status(); !st.ok()) {
    return st.error();
  }
  auto files = ExpandDataPaths(run.GetAll("data"));
  if (!files.ok()) {
    return files.error();
  }
  auto data = pipeline::BuildDataset(files.value(), w.Windowing());
  if (!data.ok()) {
    return data.error();
  }
  pipeline::Dataset subset = days.empty() ? std::move(data).value() : pipeline::SelectDays(data.value(), days);
  if (subset.size() == 0) {
    return MakeError(ErrorCode::kNoValidWindows, "no samples for the selected days");
  }
  auto ev = pipeline::Evaluate(loaded->model, subset);
  if (!ev.ok()) {
    return ev.error();
  }
  const std::string table = pipeline::FormatEvalTable(ev.value());
  log << table;
  if (!report_path.empty()) {
    KeyValueConfig resolved = Canonical("eval", run, {"model", "data", "days", "report"});
    resolved.Set("seed", std::to_string(loaded->model.seed()));
    w.Write(resolved);
    if (auto st = WriteWithConfig(report_path, resolved, table); !st.ok()) {
      return st;
    }
    if (auto st = WriteWithConfig(report_path + ".records.txt", resolved, pipeline::FormatEvalRecords(ev.value()));
        !st.ok()) {
      return st;
    }
  }
  return {};
}

// ---- detect ------------------------------------------------------------------

Status Detect(const KeyValueConfig &run, std::ostream &log) {
  Fields f(run);
  const std::string model_path = f.Required("model");
  const std::string stream_path = f.Required("stream");
  if (auto st = f.status(); !st.ok()) {
    return st.error();
  }
  auto loaded = nn::LoadModel(model_path);
  if (!loaded.ok()) {
    return loaded.error();
  }
  WindowSettings w = SettingsFromModel(loaded.value(), f);
  detect::StreamInferConfig cfg;
  cfg.detector.window_len = w.frames;
  cfg.detector.stride = f.Size("detect_stride", 1);
  cfg.preprocess = w.Windowing().preprocess;
  cfg.interval_ms = w.interval_ms;
  cfg.batch = f.Size("infer_batch", cfg.batch);
  const std::string output = f.String("output");
  if (auto st = f.status(); !st.ok()) {
    return st.error();
  }
  std::unique_ptr<csi::StreamReader> reader;
  const bool live = stream_path == "-";
  if (live) {
    // Live mode: decisions go to standard output as each second closes.
    auto r = csi::StreamReader::FromStream(std::cin, "<stdin>");
    if (!r.ok()) {
      return r.error();
    }
    reader = std::move(r).value();
    cfg.batch = std::min<std::size_t>(cfg.batch, 50);
  } else {
    auto r = csi::StreamReader::Open(stream_path);
    if (!r.ok()) {
      return r.error();
    }
    reader = std::move(r).value();
  }
  cfg.keep_labels = false;
  detect::SecondCallback on_second;
  if (live && output.empty()) {
    on_second = [](const detect::SecondRecord &r) { std::cout << detect::FormatSecond(r) << std::endl; };
  }
  auto timeline = detect::RunDetection(loaded->model, *reader, cfg, on_second);
  if (!timeline.ok()) {
    return timeline.error();
  }
  KeyValueConfig resolved = Canonical("detect", run, {"model", "stream", "output"});
  // Detection draws no random numbers; the model's seed identifies the run.
  resolved.Set("seed", std::to_string(loaded->model.seed()));
  resolved.Set("infer_batch", std::to_string(cfg.batch));
  resolved.Set("detect_stride", std::to_string(cfg.detector.stride));
  w.Write(resolved);
  const auto &stats = timeline->stats;
  std::string summary = "frames " + std::to_string(stats.frames) + ", windows " + std::to_string(stats.windows) +
                        ", rejected " + std::to_string(stats.rejected);
  for (const auto &[reason, n] : stats.reasons) {
    summary += ", " + reason + " " + std::to_string(n);
  }
  summary += ", positive seconds " + std::to_string(timeline->PositiveSeconds()) + " of " +
             std::to_string(timeline->seconds.size());
  log << summary << "\n";
  resolved.Set("summary", summary);
  const std::string body = detect::FormatTimeline(timeline.value());
  if (!output.empty()) {
    return WriteWithConfig(output, resolved, body);
  }
  if (!live) {
    std::cout << CommentBlock(resolved) << body;
  }
  return {};
}

// ---- dump --------------------------------------------------------------------

Status Dump(const KeyValueConfig &run, std::ostream &log) {
  Fields f(run);
  const std::string input = f.Required("input");
  const std::size_t limit = f.Size("limit", 0);
  if (auto st = f.status(); !st.ok()) {
    return st.error();
  }
  std::ifstream probe(input, std::ios::binary);
  if (!probe) {
    return MakeError(ErrorCode::kIoError, "cannot open '" + input + "'");
  }
  char magic[4] = {};
  probe.read(magic, 4);
  probe.close();
  if (std::string_view(magic, 4) == "RFPM") {
    auto loaded = nn::LoadModel(input);
    if (!loaded.ok()) {
      return loaded.error();
    }
    nn::Model &m = loaded->model;
    log << "model " << input << "\n";
    log << "variant " << VariantName(m.spec().variant) << ", seed " << m.seed() << ", parameters "
        << nn::CountParams(m.spec()) << "\n";
    for (auto &[name, t] : m.NamedTensors()) {
      log << "  " << name << " " << nn::ShapeString(t->shape) << "\n";
    }
    log << "metadata:\n" << loaded->metadata.Serialize();
    return {};
  }
  auto reader = csi::StreamReader::Open(input);
  if (!reader.ok()) {
    return reader.error();
  }
  const csi::StreamHeader &h = reader.value()->header();
  if (run.Has("tensors")) {
    return DumpTensors(*reader.value(), run, log);
  }
  log << "stream " << input << "\n";
  log << "shape " << h.shape.n_sc << " x " << h.shape.n_r << " x " << h.shape.n_t << ", label "
      << (h.label ? std::to_string(*h.label) : std::string("none")) << ", day '" << h.day_id << "'\n";
  std::size_t n = 0;
  std::uint64_t first = 0;
  std::uint64_t last = 0;
  while (true) {
    auto frame = reader.value()->Next();
    if (!frame.ok()) {
      return frame.error();
    }
    if (!frame.value()) {
      break;
    }
    const csi::CsiFrame &fr = *frame.value();
    if (n == 0) {
      first = fr.timestamp_us;
    }
    last = fr.timestamp_us;
    if (n < limit) {
      const Complex c = fr.h.front();
      log << "  frame " << n << " t=" << fr.timestamp_us << "us h[0]=" << c.real() << (c.imag() < 0 ? "" : "+")
          << c.imag() << "j\n";
    }
    ++n;
  }
  log << "frames " << n;
  if (n > 0) {
    log << ", first " << first << " us, last " << last << " us";
  }
  log << "\n";
  return {};
}

} // namespace rfpresence::cli
