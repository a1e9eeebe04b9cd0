#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rfpresence/core/kv_config.hpp"
#include "rfpresence/core/result.hpp"
#include "rfpresence/csi/stream_io.hpp"
#include "rfpresence/csi/types.hpp"

namespace rfpresence::synth {

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kCarrierHz = 2.437e9;          // 2.4 GHz channel 6
inline constexpr double kSubcarrierSpacingHz = 312.5e3;
inline constexpr double kGuardDelayS = 800e-9;
inline constexpr double kMaxWalkingSpeed = 2.5;

struct Vec2 {
  double x{0.0};
  double y{0.0};
};

double Distance(Vec2 a, Vec2 b);

struct Path {
  Complex gain{};
  double delay_s{0.0};
  double aoa_rad{0.0};  // arrival angle w.r.t. receive array broadside
  double aod_rad{0.0};  // departure angle w.r.t. transmit array broadside
};

struct PathSet {
  std::vector<Path> paths{};
  double carrier_hz{kCarrierHz};
  double subcarrier_spacing_hz{kSubcarrierSpacingHz};

  /// f_k = f_c + (k - N_sc/2) * delta_f
  [[nodiscard]] double SubcarrierHz(std::size_t k, std::size_t n_sc) const;
  [[nodiscard]] Status Validate() const;
};

struct Interval {
  double begin_s{0.0};
  double end_s{0.0};
};

/// Single moving reflector (the human). Positions are sampled at frame times
/// and interpolated linearly in between.
struct Trajectory {
  Vec2 tx{};
  Vec2 rx{};
  double reflection_gain{0.3};
  double sample_interval_s{0.01};
  std::vector<Vec2> positions{};
  /// When non-empty the reflector exists only inside these intervals.
  std::vector<Interval> active{};

  [[nodiscard]] Vec2 PositionAt(double t_s) const;
  [[nodiscard]] bool ActiveAt(double t_s) const;
  /// Two-segment reflected path length tx -> scatterer -> rx in meters.
  [[nodiscard]] double PathLengthAt(double t_s) const;
  [[nodiscard]] Status Validate(double max_speed_mps = kMaxWalkingSpeed) const;
};

struct Impairments {
  double cfo_hz{0.0};
  double cfo_drift_hz_per_s{0.0};
  double sto_walk_s{0.0};  // per-frame random-walk step std of the sampling offset
  double noise_std{0.0};   // per-coefficient complex noise std
  double amp_drift{1.0};   // stream-wide gain
};

/// Scene-generation knobs; loaded from a key = value file (see FromConfig).
struct SceneConfig {
  std::size_t paths{5};
  double delay_ns_max{300.0};
  double gain_min{0.05};
  double gain_max{0.35};
  double room_w_m{6.0};
  double room_d_m{5.0};
  double speed_mps{1.2};       // upper walking speed; per-segment speed drawn from [0.25 * speed, speed]
  double reflection_min{0.15};
  double reflection_max{0.45};
  double cfo_hz{300.0};
  double sto_ns_walk{0.5};
  double noise_std{0.02};
  std::size_t frames{12800};
  double interval_ms{10.0};
  std::uint64_t seed{1};

  static Result<SceneConfig> FromConfig(const KeyValueConfig &cfg);
  [[nodiscard]] KeyValueConfig ToConfig() const;
};

/// Draws a static multipath geometry. Deterministic given (config, seed).
Result<PathSet> GenerateStaticScene(const SceneConfig &config, std::uint64_t seed);

/// Draws day-level impairments for one scene.
Impairments GenerateImpairments(const SceneConfig &config, std::uint64_t seed);

/// Random walk of the reflector inside the room for `frames` samples.
Result<Trajectory> GenerateWalk(const SceneConfig &config, std::uint64_t seed, std::size_t frames,
                                double interval_s);

/// Streams synthetic frames: h_k = sum_l a_l exp(-j 2 pi f_k tau_l) with
/// per-antenna array phases, plus the reflector when present; then CFO,
/// STO, complex Gaussian noise and the stream gain are applied.
class Synthesizer final : public csi::FrameSource {
 public:
  static Result<std::unique_ptr<Synthesizer>> Create(PathSet paths, std::optional<Trajectory> trajectory,
                                                     Impairments impairments, std::size_t n_frames,
                                                     double frame_interval_s, csi::StreamHeader header,
                                                     std::uint64_t noise_seed);

  [[nodiscard]] const csi::StreamHeader &header() const override { return header_; }
  Result<std::optional<csi::CsiFrame>> Next() override;

  /// Noise-free, impairment-free channel at time t (for oracles).
  [[nodiscard]] std::vector<Complex> CleanChannel(double t_s) const;

 private:
  Synthesizer() = default;
  void AddReflector(double t_s, std::vector<Complex> &h) const;

  PathSet paths_;
  std::optional<Trajectory> trajectory_;
  Impairments imp_;
  std::size_t n_frames_{0};
  double interval_s_{0.01};
  csi::StreamHeader header_;
  std::vector<double> freqs_;
  std::vector<Complex> static_h_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  double sto_s_{0.0};
  std::size_t index_{0};
};

/// Convenience: synthesize all frames into memory.
Result<std::vector<csi::CsiFrame>> SynthCsiSeries(const PathSet &paths, const std::optional<Trajectory> &trajectory,
                                                  const Impairments &impairments, std::size_t n_frames,
                                                  double frame_interval_s, const csi::StreamHeader &header,
                                                  std::uint64_t noise_seed);

} // namespace rfpresence::synth
