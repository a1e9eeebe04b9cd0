#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rfpresence/core/result.hpp"
#include "rfpresence/synth/channel.hpp"

namespace rfpresence::synth {

struct DatasetGenConfig {
  SceneConfig scene{};
  std::size_t scenes{6};
  std::size_t windows_per_label{400};
  std::size_t window_frames{csi::kDefaultWindowFrames};
  csi::CsiShape shape{};
  std::uint64_t seed{1};

  [[nodiscard]] std::size_t FramesPerStream() const { return windows_per_label * window_frames; }
};

/// One collection "day": a fresh static geometry and impairment draw, with a
/// human-free run (label 0) and a walking run (label 1).
struct SceneStreams {
  std::string day_id;
  std::unique_ptr<Synthesizer> empty;
  std::unique_ptr<Synthesizer> motion;
};

std::string DayId(std::size_t scene_index);

Result<SceneStreams> MakeSceneStreams(const DatasetGenConfig &config, std::size_t scene_index);

struct GeneratedFile {
  std::string path;
  std::string day_id;
  std::uint8_t label{0};
  std::size_t frames{0};
};

/// Writes two canonical stream files per scene into `out_dir` (which must exist).
Result<std::vector<GeneratedFile>> GenerateDataset(const DatasetGenConfig &config, const std::string &out_dir);

/// Unlabeled stream of one scene where the reflector walks only inside
/// `motion` intervals (seconds from stream start).
Result<std::unique_ptr<Synthesizer>> MakeScheduledStream(const DatasetGenConfig &config, std::size_t scene_index,
                                                         double duration_s, std::vector<Interval> motion,
                                                         std::uint64_t stream_seed);

} // namespace rfpresence::synth
