#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rfpresence/cli/commands.hpp"

namespace {

using rfpresence::KeyValueConfig;

/// Flags map one-to-one onto run-configuration keys; only flags actually
/// given on the command line override the config file.
class FlagSet {
 public:
  explicit FlagSet(CLI::App *app) : app_(app) {}

  FlagSet &Value(const std::string &flag, const std::string &key, const std::string &help) {
    auto holder = std::make_unique<std::string>();
    CLI::Option *opt = app_->add_option(flag, *holder, help);
    single_.push_back({opt, key, std::move(holder)});
    return *this;
  }
  FlagSet &Repeated(const std::string &flag, const std::string &key, const std::string &help) {
    auto holder = std::make_unique<std::vector<std::string>>();
    CLI::Option *opt = app_->add_option(flag, *holder, help);
    repeated_.push_back({opt, key, std::move(holder)});
    return *this;
  }

  [[nodiscard]] KeyValueConfig Collect(const std::string &command) const {
    KeyValueConfig kv;
    kv.Add("command", command);
    for (const auto &s : single_) {
      if (s.opt->count() > 0) {
        kv.Add(s.key, *s.value);
      }
    }
    for (const auto &r : repeated_) {
      for (const auto &v : *r.values) {
        kv.Add(r.key, v);
      }
    }
    return kv;
  }

 private:
  struct Single {
    CLI::Option *opt;
    std::string key;
    std::unique_ptr<std::string> value;
  };
  struct Many {
    CLI::Option *opt;
    std::string key;
    std::unique_ptr<std::vector<std::string>> values;
  };
  CLI::App *app_;
  std::vector<Single> single_;
  std::vector<Many> repeated_;
};

void AddWindowFlags(FlagSet &f, const std::string &stride_key = "stride",
                    const std::string &stride_help = "window stride in frames (default: non-overlapping)") {
  f.Value("--variant", "variant",
          "with-dft, no-dft, mag-only, phase-only, complex, single-cnn or single-cnn-no-dft")
      .Value("--frames", "frames", "frames per window (I)")
      .Value("--interval-ms", "interval_ms", "nominal frame spacing in milliseconds")
      .Value("--subcarriers", "n_f", "selected subcarriers (N_f)")
      .Value("--crop", "crop", "time-frequency rows kept after the DFT (T)")
      .Value("--stride", stride_key, stride_help);
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Device-free presence detection from WiFi CSI"};
  app.require_subcommand(1);
  std::optional<std::string> config_path;

  struct Sub {
    CLI::App *app;
    std::unique_ptr<FlagSet> flags;
  };
  std::vector<Sub> subs;
  auto add = [&](const std::string &name, const std::string &help) -> FlagSet & {
    CLI::App *sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key = value run configuration; flags override it");
    subs.push_back({sub, std::make_unique<FlagSet>(sub)});
    subs.back().flags->Value("--seed", "seed", "random seed");
    return *subs.back().flags;
  };

  add("simulate", "synthesize labeled training streams, or one scheduled stream with --duration")
      .Value("--out-dir", "out_dir", "directory for the labeled dataset (must exist)")
      .Value("--scenes", "scenes", "number of scenes (days)")
      .Value("--windows", "windows", "windows per label per scene")
      .Value("--frames", "frames", "frames per window")
      .Value("--interval-ms", "interval_ms", "frame spacing in milliseconds")
      .Value("--duration", "duration", "seconds of a single scheduled stream")
      .Value("--motion", "motion", "motion intervals in seconds, e.g. 100-160,220-240")
      .Value("--scene-index", "scene_index", "scene of the scheduled stream")
      .Value("--stream-seed", "stream_seed", "seed of the scheduled walk and noise")
      .Value("--noise-std", "noise_std", "complex noise standard deviation")
      .Value("--output", "output", "scheduled stream file");

  add("import", "convert a JSON-lines CSI dump into the binary stream format")
      .Value("--input", "input", "JSON-lines file")
      .Value("--output", "output", "binary stream file");

  {
    FlagSet &f = add("train", "build a dataset from stream files and train a classifier");
    f.Repeated("--data", "data", "stream file or directory of *.csi files (repeatable)")
        .Value("--train-days", "train_days", "comma-separated training days (default: all others)")
        .Value("--val-days", "val_days", "comma-separated validation days, taken from training data")
        .Value("--test-days", "test_days", "comma-separated held-out test days")
        .Value("--epochs", "epochs", "training epochs")
        .Value("--lr", "lr", "Adam learning rate")
        .Value("--batch", "batch", "mini-batch size")
        .Value("--l2", "l2", "L2 coefficient on dense weights")
        .Value("--output", "output", "model file");
    AddWindowFlags(f);
  }
  {
    FlagSet &f = add("eval", "evaluate a model on stream files, per day");
    f.Value("--model", "model", "model file")
        .Repeated("--data", "data", "stream file or directory (repeatable)")
        .Value("--days", "days", "comma-separated days to evaluate (default: all)")
        .Value("--report", "report", "report file");
    AddWindowFlags(f);
  }
  {
    FlagSet &f = add("detect", "per-second presence decisions on a stream ('-' reads standard input)");
    f.Value("--model", "model", "model file")
        .Value("--stream", "stream", "stream file, or - for live input")
        .Value("--output", "output", "timeline file (default: standard output)")
        .Value("--batch", "infer_batch", "windows per inference call");
    AddWindowFlags(f, "detect_stride", "detection window stride in frames (default: 1)");
  }
  {
    FlagSet &f = add("dump", "describe a stream or model file, or dump pre-processed windows");
    f.Value("--input", "input", "stream or model file")
        .Value("--limit", "limit", "frames to print")
        .Value("--tensors", "tensors", "write pre-processed inputs of a stream here (f32 with shape headers)")
        .Value("--windows", "windows", "number of windows to dump with --tensors");
    AddWindowFlags(f);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e);
  }

  for (const auto &s : subs) {
    if (!s.app->parsed()) {
      continue;
    }
    const std::string command = s.app->get_name();
    auto run = rfpresence::cli::MergeConfig(config_path, s.flags->Collect(command));
    if (!run.ok()) {
      std::cerr << "error: " << run.error().ToString() << "\n";
      return 1;
    }
    // A replayed manifest names its own command; the subcommand wins.
    run->Erase("command");
    run->Set("command", command);
    std::ostream &log = command == "dump" ? std::cout : std::cerr;
    if (auto st = rfpresence::cli::RunCommand(run.value(), log); !st.ok()) {
      std::cerr << "error: " << st.error().ToString() << "\n";
      return 1;
    }
    return 0;
  }
  return 1;
}
