#include "rfpresence/synth/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "rfpresence/core/random.hpp"

namespace rfpresence::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double Uniform(std::mt19937_64 &rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Half-wavelength uniform linear array: element n sees exp(-j*pi*n*sin(theta)).
Complex ElementPhase(std::size_t n, double sin_theta) {
  return std::polar(1.0, -std::numbers::pi * static_cast<double>(n) * sin_theta);
}

} // namespace

double Distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

double PathSet::SubcarrierHz(std::size_t k, std::size_t n_sc) const {
  return carrier_hz + (static_cast<double>(k) - static_cast<double>(n_sc / 2)) * subcarrier_spacing_hz;
}

Status PathSet::Validate() const {
  if (paths.empty()) {
    return MakeError(ErrorCode::kEmptyScene, "scene needs at least one static path");
  }
  for (const auto &p : paths) {
    if (!(p.delay_s >= 0.0) || p.delay_s >= kGuardDelayS) {
      return MakeError(ErrorCode::kInvalidArgument, "path delay outside [0, 800 ns)");
    }
  }
  return {};
}

Vec2 Trajectory::PositionAt(double t_s) const {
  if (positions.empty()) {
    return {};
  }
  const double u = std::max(0.0, t_s / sample_interval_s);
  const auto i = static_cast<std::size_t>(u);
  if (i + 1 >= positions.size()) {
    return positions.back();
  }
  const double f = u - static_cast<double>(i);
  return {positions[i].x + f * (positions[i + 1].x - positions[i].x),
          positions[i].y + f * (positions[i + 1].y - positions[i].y)};
}

bool Trajectory::ActiveAt(double t_s) const {
  if (active.empty()) {
    return true;
  }
  return std::any_of(active.begin(), active.end(),
                     [t_s](const Interval &iv) { return t_s >= iv.begin_s && t_s < iv.end_s; });
}

double Trajectory::PathLengthAt(double t_s) const {
  const Vec2 s = PositionAt(t_s);
  return Distance(tx, s) + Distance(s, rx);
}

Status Trajectory::Validate(double max_speed_mps) const {
  if (positions.empty()) {
    return MakeError(ErrorCode::kInvalidArgument, "trajectory has no samples");
  }
  if (!(sample_interval_s > 0.0)) {
    return MakeError(ErrorCode::kInvalidArgument, "trajectory sample interval must be positive");
  }
  for (std::size_t i = 1; i < positions.size(); ++i) {
    const double v = Distance(positions[i - 1], positions[i]) / sample_interval_s;
    if (v > max_speed_mps * (1.0 + 1e-9)) {
      return MakeError(ErrorCode::kSpeedLimitExceeded,
                       "speed " + std::to_string(v) + " m/s at sample " + std::to_string(i));
    }
  }
  return {};
}

Result<SceneConfig> SceneConfig::FromConfig(const KeyValueConfig &cfg) {
  static const std::set<std::string> kKnown = {
      "paths",     "delay_ns_max", "gain_min", "gain_max", "room_w_m",    "room_d_m",
      "speed_mps", "reflection_min", "reflection_max", "cfo_hz", "sto_ns_walk", "noise_std",
      "frames",    "interval_ms",  "seed"};
  for (const auto &[k, v] : cfg.entries()) {
    if (!kKnown.count(k)) {
      return MakeError(ErrorCode::kParseError, "unknown simulator key '" + k + "'");
    }
  }
  SceneConfig c;
  auto get_d = [&](const char *key, double &dst) -> Status {
    auto r = cfg.GetDouble(key, dst);
    if (!r.ok()) {
      return r.error();
    }
    dst = r.value();
    return {};
  };
  auto get_u = [&](const char *key, auto &dst) -> Status {
    auto r = cfg.GetInt(key, static_cast<std::int64_t>(dst));
    if (!r.ok()) {
      return r.error();
    }
    if (r.value() < 0) {
      return MakeError(ErrorCode::kParseError, std::string("key '") + key + "' must be non-negative");
    }
    dst = static_cast<std::remove_reference_t<decltype(dst)>>(r.value());
    return {};
  };
  for (Status st : {get_u("paths", c.paths), get_d("delay_ns_max", c.delay_ns_max), get_d("gain_min", c.gain_min),
                    get_d("gain_max", c.gain_max), get_d("room_w_m", c.room_w_m), get_d("room_d_m", c.room_d_m),
                    get_d("speed_mps", c.speed_mps), get_d("reflection_min", c.reflection_min),
                    get_d("reflection_max", c.reflection_max), get_d("cfo_hz", c.cfo_hz),
                    get_d("sto_ns_walk", c.sto_ns_walk), get_d("noise_std", c.noise_std),
                    get_u("frames", c.frames), get_d("interval_ms", c.interval_ms), get_u("seed", c.seed)}) {
    if (!st.ok()) {
      return st.error();
    }
  }
  if (c.delay_ns_max <= 0.0 || c.delay_ns_max > kGuardDelayS * 1e9) {
    return MakeError(ErrorCode::kInvalidArgument, "delay_ns_max must lie in (0, 800]");
  }
  if (c.speed_mps <= 0.0 || c.speed_mps > kMaxWalkingSpeed) {
    return MakeError(ErrorCode::kInvalidArgument, "speed_mps must lie in (0, 2.5]");
  }
  if (c.noise_std < 0.0 || c.interval_ms <= 0.0 || c.gain_min > c.gain_max ||
      c.reflection_min > c.reflection_max) {
    return MakeError(ErrorCode::kInvalidArgument, "inconsistent simulator ranges");
  }
  return c;
}

KeyValueConfig SceneConfig::ToConfig() const {
  KeyValueConfig cfg;
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  cfg.Set("paths", std::to_string(paths));
  cfg.Set("delay_ns_max", num(delay_ns_max));
  cfg.Set("gain_min", num(gain_min));
  cfg.Set("gain_max", num(gain_max));
  cfg.Set("room_w_m", num(room_w_m));
  cfg.Set("room_d_m", num(room_d_m));
  cfg.Set("speed_mps", num(speed_mps));
  cfg.Set("reflection_min", num(reflection_min));
  cfg.Set("reflection_max", num(reflection_max));
  cfg.Set("cfo_hz", num(cfo_hz));
  cfg.Set("sto_ns_walk", num(sto_ns_walk));
  cfg.Set("noise_std", num(noise_std));
  cfg.Set("frames", std::to_string(frames));
  cfg.Set("interval_ms", num(interval_ms));
  cfg.Set("seed", std::to_string(seed));
  return cfg;
}

Result<PathSet> GenerateStaticScene(const SceneConfig &config, std::uint64_t seed) {
  if (config.paths == 0) {
    return MakeError(ErrorCode::kEmptyScene, "path count 0 requested");
  }
  std::mt19937_64 rng(DeriveSeed(seed, 0x5CE7E));
  PathSet set;
  const double delay_max = std::min(config.delay_ns_max * 1e-9, kGuardDelayS);
  for (std::size_t l = 0; l < config.paths; ++l) {
    Path p;
    // Path 0 is the dominant (quasi line-of-sight) component.
    const double mag = l == 0 ? 1.0 : Uniform(rng, config.gain_min, config.gain_max);
    p.gain = std::polar(mag, Uniform(rng, -std::numbers::pi, std::numbers::pi));
    p.delay_s = l == 0 ? Uniform(rng, 0.0, 0.25 * delay_max) : Uniform(rng, 0.0, delay_max);
    p.aoa_rad = Uniform(rng, -std::numbers::pi / 2, std::numbers::pi / 2);
    p.aod_rad = Uniform(rng, -std::numbers::pi / 2, std::numbers::pi / 2);
    set.paths.push_back(p);
  }
  return set;
}

Impairments GenerateImpairments(const SceneConfig &config, std::uint64_t seed) {
  std::mt19937_64 rng(DeriveSeed(seed, 0x1A9A1));
  Impairments imp;
  const double sign = Uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
  imp.cfo_hz = sign * config.cfo_hz * Uniform(rng, 0.5, 1.5);
  imp.cfo_drift_hz_per_s = config.cfo_hz * Uniform(rng, -0.01, 0.01);
  imp.sto_walk_s = config.sto_ns_walk * 1e-9 * Uniform(rng, 0.5, 1.5);
  imp.noise_std = config.noise_std * Uniform(rng, 0.5, 1.5);
  imp.amp_drift = Uniform(rng, 0.5, 2.0);
  return imp;
}

Result<Trajectory> GenerateWalk(const SceneConfig &config, std::uint64_t seed, std::size_t frames,
                                double interval_s) {
  if (frames == 0 || !(interval_s > 0.0)) {
    return MakeError(ErrorCode::kInvalidArgument, "walk needs frames > 0 and a positive interval");
  }
  std::mt19937_64 rng(DeriveSeed(seed, 0x3A1C));
  const double margin = 0.4;
  auto random_point = [&] {
    return Vec2{Uniform(rng, margin, config.room_w_m - margin), Uniform(rng, margin, config.room_d_m - margin)};
  };
  Trajectory traj;
  traj.tx = {0.3, Uniform(rng, 0.3, config.room_d_m - 0.3)};
  traj.rx = {config.room_w_m - 0.3, Uniform(rng, 0.3, config.room_d_m - 0.3)};
  traj.reflection_gain = Uniform(rng, config.reflection_min, config.reflection_max);
  traj.sample_interval_s = interval_s;
  traj.positions.reserve(frames);

  Vec2 pos = random_point();
  Vec2 target = random_point();
  double speed = Uniform(rng, 0.25 * config.speed_mps, config.speed_mps);
  for (std::size_t i = 0; i < frames; ++i) {
    traj.positions.push_back(pos);
    double budget = speed * interval_s;
    while (budget > 0.0) {
      const double d = Distance(pos, target);
      if (d > budget) {
        pos.x += (target.x - pos.x) * budget / d;
        pos.y += (target.y - pos.y) * budget / d;
        budget = 0.0;
      } else {
        // Turn at the waypoint; keep the per-sample distance within budget.
        pos = target;
        budget = 0.0;
        target = random_point();
        speed = Uniform(rng, 0.25 * config.speed_mps, config.speed_mps);
      }
    }
  }
  return traj;
}

Result<std::unique_ptr<Synthesizer>> Synthesizer::Create(PathSet paths, std::optional<Trajectory> trajectory,
                                                         Impairments impairments, std::size_t n_frames,
                                                         double frame_interval_s, csi::StreamHeader header,
                                                         std::uint64_t noise_seed) {
  if (auto st = paths.Validate(); !st.ok()) {
    return st.error();
  }
  if (trajectory) {
    if (auto st = trajectory->Validate(); !st.ok()) {
      return st.error();
    }
  }
  if (!(impairments.noise_std >= 0.0)) {
    return MakeError(ErrorCode::kInvalidArgument, "noise_std must be non-negative");
  }
  if (!(frame_interval_s > 0.0)) {
    return MakeError(ErrorCode::kInvalidArgument, "frame interval must be positive");
  }
  if (header.shape.size() == 0) {
    return MakeError(ErrorCode::kInvalidArgument, "empty CSI shape");
  }
  std::unique_ptr<Synthesizer> s(new Synthesizer());
  if (!trajectory) {
    header.label = std::uint8_t{0};
  } else if (trajectory->active.empty()) {
    header.label = std::uint8_t{1};
  } else {
    header.label.reset();  // scheduled motion: no single stream label
  }
  header.sample_interval_ms = frame_interval_s * 1e3;
  s->paths_ = std::move(paths);
  s->trajectory_ = std::move(trajectory);
  s->imp_ = impairments;
  s->n_frames_ = n_frames;
  s->interval_s_ = frame_interval_s;
  s->header_ = std::move(header);
  s->rng_.seed(noise_seed);

  const auto &shape = s->header_.shape;
  s->freqs_.resize(shape.n_sc);
  for (std::size_t k = 0; k < shape.n_sc; ++k) {
    s->freqs_[k] = s->paths_.SubcarrierHz(k, shape.n_sc);
  }
  s->static_h_.assign(shape.size(), Complex{});
  for (const auto &p : s->paths_.paths) {
    const double sin_a = std::sin(p.aoa_rad);
    const double sin_d = std::sin(p.aod_rad);
    for (std::size_t k = 0; k < shape.n_sc; ++k) {
      const Complex base = p.gain * std::polar(1.0, -kTwoPi * std::fmod(s->freqs_[k] * p.delay_s, 1.0));
      for (std::size_t q = 0; q < shape.n_r; ++q) {
        const Complex bq = base * ElementPhase(q, sin_a);
        for (std::size_t t = 0; t < shape.n_t; ++t) {
          s->static_h_[shape.Index(k, q, t)] += bq * ElementPhase(t, sin_d);
        }
      }
    }
  }
  return s;
}

void Synthesizer::AddReflector(double t_s, std::vector<Complex> &h) const {
  if (!trajectory_ || !trajectory_->ActiveAt(t_s)) {
    return;
  }
  const auto &traj = *trajectory_;
  const auto &shape = header_.shape;
  const Vec2 s = traj.PositionAt(t_s);
  const double l_tx = std::max(Distance(traj.tx, s), 1e-6);
  const double l_rx = std::max(Distance(s, traj.rx), 1e-6);
  const double tau = (l_tx + l_rx) / kSpeedOfLight;
  // Arrays lie along x; sin of the angle from broadside is the x direction cosine.
  const double sin_rx = (s.x - traj.rx.x) / l_rx;
  const double sin_tx = (s.x - traj.tx.x) / l_tx;
  std::vector<Complex> rxph(shape.n_r);
  std::vector<Complex> txph(shape.n_t);
  for (std::size_t q = 0; q < shape.n_r; ++q) {
    rxph[q] = ElementPhase(q, sin_rx);
  }
  for (std::size_t p = 0; p < shape.n_t; ++p) {
    txph[p] = ElementPhase(p, sin_tx);
  }
  for (std::size_t k = 0; k < shape.n_sc; ++k) {
    const Complex base = traj.reflection_gain * std::polar(1.0, -kTwoPi * std::fmod(freqs_[k] * tau, 1.0));
    for (std::size_t q = 0; q < shape.n_r; ++q) {
      const Complex bq = base * rxph[q];
      for (std::size_t p = 0; p < shape.n_t; ++p) {
        h[shape.Index(k, q, p)] += bq * txph[p];
      }
    }
  }
}

std::vector<Complex> Synthesizer::CleanChannel(double t_s) const {
  std::vector<Complex> h = static_h_;
  AddReflector(t_s, h);
  return h;
}

Result<std::optional<csi::CsiFrame>> Synthesizer::Next() {
  if (index_ >= n_frames_) {
    return std::optional<csi::CsiFrame>{};
  }
  const auto &shape = header_.shape;
  const double t = static_cast<double>(index_) * interval_s_;
  csi::CsiFrame frame;
  frame.timestamp_us = static_cast<std::uint64_t>(std::llround(t * 1e6));
  frame.h = CleanChannel(t);

  if (index_ > 0) {
    sto_s_ += imp_.sto_walk_s * normal_(rng_);
  }
  const double cfo_cycles = std::fmod(imp_.cfo_hz * t + 0.5 * imp_.cfo_drift_hz_per_s * t * t, 1.0);
  const std::size_t per_sc = static_cast<std::size_t>(shape.n_r) * shape.n_t;
  const double noise_scale = imp_.noise_std / std::numbers::sqrt2;
  for (std::size_t k = 0; k < shape.n_sc; ++k) {
    // CFO rotation is common to every coefficient; STO is a per-subcarrier
    // rotation shared by all antennas.
    const double cycles = cfo_cycles - std::fmod(freqs_[k] * sto_s_, 1.0);
    const Complex rot = std::polar(1.0, kTwoPi * cycles);
    for (std::size_t j = 0; j < per_sc; ++j) {
      Complex v = frame.h[k * per_sc + j] * rot;
      if (imp_.noise_std > 0.0) {
        const double re = normal_(rng_);
        const double im = normal_(rng_);
        v += Complex(re, im) * noise_scale;
      }
      frame.h[k * per_sc + j] = v * imp_.amp_drift;
    }
  }
  ++index_;
  return std::optional<csi::CsiFrame>{std::move(frame)};
}

Result<std::vector<csi::CsiFrame>> SynthCsiSeries(const PathSet &paths, const std::optional<Trajectory> &trajectory,
                                                  const Impairments &impairments, std::size_t n_frames,
                                                  double frame_interval_s, const csi::StreamHeader &header,
                                                  std::uint64_t noise_seed) {
  auto synth = Synthesizer::Create(paths, trajectory, impairments, n_frames, frame_interval_s, header, noise_seed);
  if (!synth.ok()) {
    return synth.error();
  }
  return csi::ReadAllFrames(*synth.value());
}

} // namespace rfpresence::synth
