#include "rfpresence/synth/dataset_gen.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "rfpresence/core/random.hpp"

namespace rfpresence::synth {

namespace {

std::uint64_t SceneSeed(const DatasetGenConfig &config, std::size_t scene_index) {
  return DeriveSeed(config.seed, scene_index + 1);
}

csi::StreamHeader BaseHeader(const DatasetGenConfig &config, std::string day_id) {
  csi::StreamHeader h;
  h.shape = config.shape;
  h.sample_interval_ms = config.scene.interval_ms;
  h.day_id = std::move(day_id);
  return h;
}

} // namespace

std::string DayId(std::size_t scene_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "day-%02zu", scene_index + 1);
  return buf;
}

Result<SceneStreams> MakeSceneStreams(const DatasetGenConfig &config, std::size_t scene_index) {
  const std::uint64_t seed = SceneSeed(config, scene_index);
  auto paths = GenerateStaticScene(config.scene, seed);
  if (!paths.ok()) {
    return paths.error();
  }
  const Impairments imp = GenerateImpairments(config.scene, seed);
  const double interval_s = config.scene.interval_ms * 1e-3;
  const std::size_t frames = config.FramesPerStream();

  SceneStreams out;
  out.day_id = DayId(scene_index);
  auto empty = Synthesizer::Create(paths.value(), std::nullopt, imp, frames, interval_s,
                                   BaseHeader(config, out.day_id), DeriveSeed(seed, 100));
  if (!empty.ok()) {
    return empty.error();
  }
  auto walk = GenerateWalk(config.scene, DeriveSeed(seed, 200), frames, interval_s);
  if (!walk.ok()) {
    return walk.error();
  }
  auto motion = Synthesizer::Create(paths.value(), std::move(walk).value(), imp, frames, interval_s,
                                    BaseHeader(config, out.day_id), DeriveSeed(seed, 101));
  if (!motion.ok()) {
    return motion.error();
  }
  out.empty = std::move(empty).value();
  out.motion = std::move(motion).value();
  return out;
}

Result<std::vector<GeneratedFile>> GenerateDataset(const DatasetGenConfig &config, const std::string &out_dir) {
  if (config.scenes == 0 || config.windows_per_label == 0) {
    return MakeError(ErrorCode::kInvalidArgument, "scene and window counts must be positive");
  }
  std::error_code ec;
  if (!std::filesystem::is_directory(out_dir, ec)) {
    return MakeError(ErrorCode::kIoError, "output directory '" + out_dir + "' does not exist");
  }
  std::vector<GeneratedFile> files;
  for (std::size_t s = 0; s < config.scenes; ++s) {
    auto streams = MakeSceneStreams(config, s);
    if (!streams.ok()) {
      return streams.error();
    }
    for (Synthesizer *src : {streams->empty.get(), streams->motion.get()}) {
      const std::uint8_t label = *src->header().label;
      const std::string path =
          (std::filesystem::path(out_dir) / (streams->day_id + (label ? "_motion.csi" : "_empty.csi"))).string();
      auto writer = csi::StreamWriter::Open(path, src->header());
      if (!writer.ok()) {
        return writer.error();
      }
      std::size_t n = 0;
      while (true) {
        auto f = src->Next();
        if (!f.ok()) {
          return f.error();
        }
        if (!f.value()) {
          break;
        }
        if (auto st = writer.value()->Append(*f.value()); !st.ok()) {
          return st.error();
        }
        ++n;
      }
      if (auto st = writer.value()->Close(); !st.ok()) {
        return st.error();
      }
      files.push_back({path, streams->day_id, label, n});
    }
  }
  return files;
}

Result<std::unique_ptr<Synthesizer>> MakeScheduledStream(const DatasetGenConfig &config, std::size_t scene_index,
                                                         double duration_s, std::vector<Interval> motion,
                                                         std::uint64_t stream_seed) {
  const std::uint64_t seed = SceneSeed(config, scene_index);
  auto paths = GenerateStaticScene(config.scene, seed);
  if (!paths.ok()) {
    return paths.error();
  }
  const Impairments imp = GenerateImpairments(config.scene, seed);
  const double interval_s = config.scene.interval_ms * 1e-3;
  const auto frames = static_cast<std::size_t>(std::llround(duration_s / interval_s));
  std::optional<Trajectory> traj;
  if (!motion.empty()) {
    auto walk = GenerateWalk(config.scene, DeriveSeed(stream_seed, 200), frames, interval_s);
    if (!walk.ok()) {
      return walk.error();
    }
    traj = std::move(walk).value();
    traj->active = std::move(motion);
  }
  auto header = BaseHeader(config, DayId(scene_index));
  auto synth = Synthesizer::Create(std::move(paths).value(), std::move(traj), imp, frames, interval_s,
                                   std::move(header), DeriveSeed(stream_seed, 101));
  if (!synth.ok()) {
    return synth.error();
  }
  return std::move(synth).value();
}

} // namespace rfpresence::synth
