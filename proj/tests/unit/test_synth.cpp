#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>

#include "oracles/dft_oracle.hpp"
#include "rfpresence/synth/dataset_gen.hpp"

using namespace rfpresence;
using namespace rfpresence::synth;

namespace {

csi::StreamHeader Header() {
  csi::StreamHeader h;
  h.shape = {56, 3, 3};
  return h;
}

std::vector<csi::CsiFrame> Frames(const PathSet &paths, const std::optional<Trajectory> &traj, const Impairments &imp,
                                  std::size_t n, double dt = 0.01) {
  auto f = SynthCsiSeries(paths, traj, imp, n, dt, Header(), 5);
  REQUIRE(f.ok());
  return std::move(f).value();
}

std::string ReadBytes(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("static scenes honour the configured bounds and are reproducible") {
  SceneConfig cfg;
  cfg.paths = 5;
  auto a = GenerateStaticScene(cfg, 7);
  auto b = GenerateStaticScene(cfg, 7);
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  CHECK(a->paths.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(a->paths[i].delay_s >= 0.0);
    CHECK(a->paths[i].delay_s < 800e-9);
    CHECK(a->paths[i].gain == b->paths[i].gain);
    CHECK(a->paths[i].delay_s == b->paths[i].delay_s);
  }
  cfg.paths = 0;
  CHECK(GenerateStaticScene(cfg, 7).error().code == ErrorCode::kEmptyScene);
}

TEST_CASE("subcarrier frequencies are centred on channel 6") {
  PathSet p;
  CHECK(p.SubcarrierHz(28, 56) == doctest::Approx(2.437e9));
  CHECK(p.SubcarrierHz(0, 56) == doctest::Approx(2.437e9 - 28 * 312.5e3));
}

TEST_CASE("without motion or impairments every frame is identical") {
  auto paths = GenerateStaticScene(SceneConfig{}, 3);
  REQUIRE(paths.ok());
  const auto frames = Frames(paths.value(), std::nullopt, Impairments{}, 50);
  for (const auto &f : frames) {
    CHECK(f.h == frames.front().h);
  }
}

TEST_CASE("CFO and STO leave magnitudes and antenna phase differences unchanged") {
  auto paths = GenerateStaticScene(SceneConfig{}, 3);
  REQUIRE(paths.ok());
  Impairments imp;
  imp.cfo_hz = 137.0;
  imp.cfo_drift_hz_per_s = 3.0;
  imp.sto_walk_s = 2e-9;
  const auto frames = Frames(paths.value(), std::nullopt, imp, 80);
  const csi::CsiShape s{56, 3, 3};
  double max_mag = 0.0;
  double max_phase = 0.0;
  for (const auto &f : frames) {
    for (std::size_t k = 0; k < 56; ++k) {
      for (std::size_t q = 0; q < 3; ++q) {
        for (std::size_t p = 0; p < 3; ++p) {
          const Complex a = f.at(s, k, q, p);
          const Complex a0 = frames.front().at(s, k, q, p);
          max_mag = std::max(max_mag, std::abs(std::abs(a) - std::abs(a0)));
          const Complex r = a * std::conj(f.at(s, k, 0, p));
          const Complex r0 = a0 * std::conj(frames.front().at(s, k, 0, p));
          max_phase = std::max(max_phase, std::abs(std::arg(r * std::conj(r0))));
        }
      }
    }
  }
  CHECK(max_mag < 1e-12);
  CHECK(max_phase < 1e-9);
  // The impairments do rotate the coefficients.
  CHECK(std::abs(frames[40].h[0] - frames[0].h[0]) > 1e-3);
}

TEST_CASE("noise and gain drift behave as configured") {
  auto paths = GenerateStaticScene(SceneConfig{}, 3);
  REQUIRE(paths.ok());
  Impairments imp;
  imp.amp_drift = 1.5;
  const auto clean = Frames(paths.value(), std::nullopt, Impairments{}, 1);
  const auto scaled = Frames(paths.value(), std::nullopt, imp, 1);
  for (std::size_t e = 0; e < clean[0].h.size(); ++e) {
    CHECK(std::abs(scaled[0].h[e] - 1.5 * clean[0].h[e]) < 1e-12);
  }
  Impairments noisy;
  noisy.noise_std = 0.1;
  const auto n = Frames(paths.value(), std::nullopt, noisy, 200);
  double sq = 0.0;
  std::size_t count = 0;
  for (const auto &f : n) {
    for (std::size_t e = 0; e < f.h.size(); ++e) {
      sq += std::norm(f.h[e] - clean[0].h[e]);
      ++count;
    }
  }
  CHECK(std::sqrt(sq / static_cast<double>(count)) == doctest::Approx(0.1).epsilon(0.02));
  noisy.noise_std = -1.0;
  CHECK_FALSE(SynthCsiSeries(paths.value(), std::nullopt, noisy, 1, 0.01, Header(), 1).ok());
}

TEST_CASE("a moving reflector produces the Doppler shift of its path-length rate") {
  // Weak static path, reflector moving away from both ends at 1 m/s.
  PathSet paths;
  paths.paths.push_back({Complex(1e-3, 0.0), 50e-9, 0.1, 0.2});
  const std::size_t n = 256;
  const double dt = 0.01;
  Trajectory traj;
  traj.tx = {0.0, 0.0};
  traj.rx = {0.5, 0.0};
  traj.reflection_gain = 0.5;
  traj.sample_interval_s = dt;
  for (std::size_t i = 0; i < n; ++i) {
    traj.positions.push_back({0.25, 2.0 + 1.0 * dt * static_cast<double>(i)});
  }
  const auto frames = Frames(paths, traj, Impairments{}, n, dt);

  const std::size_t k = 10;
  const double f_k = paths.SubcarrierHz(k, 56);
  // Oracle: path length from geometry, rate by central difference at mid-stream.
  auto length = [&](double y) { return 2.0 * std::hypot(0.25, y); };
  const double y_mid = 2.0 + 1.0 * dt * (n / 2.0);
  const double rate = (length(y_mid + 1e-4) - length(y_mid - 1e-4)) / 2e-4;
  const double doppler = -f_k * rate / 299792458.0;

  std::vector<oracle::Cplx> series(n);
  const csi::CsiShape s{56, 3, 3};
  for (std::size_t i = 0; i < n; ++i) {
    series[i] = frames[i].at(s, k, 0, 0);
  }
  const auto spec = oracle::Dft(series);
  std::size_t best = 1;
  for (std::size_t m = 1; m < n; ++m) {
    if (std::abs(spec[m]) > std::abs(spec[best])) {
      best = m;
    }
  }
  const double bin_hz = 1.0 / (dt * static_cast<double>(n));
  const double peak_hz = (best < n / 2 ? static_cast<double>(best) : static_cast<double>(best) - n) * bin_hz;
  CHECK(std::abs(doppler) > 10.0);
  CHECK(std::abs(peak_hz - doppler) <= bin_hz);
}

TEST_CASE("trajectories faster than walking speed are rejected") {
  Trajectory t;
  t.sample_interval_s = 0.01;
  t.positions = {{0.0, 0.0}, {0.02, 0.0}, {0.1, 0.0}};
  CHECK(t.Validate().error().code == ErrorCode::kSpeedLimitExceeded);
  t.positions = {{0.0, 0.0}, {0.02, 0.0}};
  CHECK(t.Validate().ok());
}

TEST_CASE("generated walks stay in the room and under the speed limit") {
  SceneConfig cfg;
  auto walk = GenerateWalk(cfg, 9, 3000, 0.01);
  REQUIRE(walk.ok());
  CHECK(walk->Validate().ok());
  for (const auto &p : walk->positions) {
    CHECK(p.x >= 0.0);
    CHECK(p.x <= cfg.room_w_m);
    CHECK(p.y >= 0.0);
    CHECK(p.y <= cfg.room_d_m);
  }
}

TEST_CASE("dataset generation is balanced and byte-reproducible") {
  DatasetGenConfig cfg;
  cfg.scenes = 2;
  cfg.windows_per_label = 3;
  cfg.seed = 21;
  std::filesystem::create_directories("synth_a");
  std::filesystem::create_directories("synth_b");
  auto a = GenerateDataset(cfg, "synth_a");
  auto b = GenerateDataset(cfg, "synth_b");
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  REQUIRE(a->size() == 4);
  std::size_t positives = 0;
  for (std::size_t i = 0; i < a->size(); ++i) {
    CHECK(a.value()[i].frames == 3 * 128);
    positives += a.value()[i].label;
    CHECK(ReadBytes(a.value()[i].path) == ReadBytes(b.value()[i].path));
  }
  CHECK(positives == 2);
  CHECK(a.value()[0].day_id != a.value()[2].day_id);
  CHECK_FALSE(GenerateDataset(cfg, "no_such_dir").ok());

  cfg.seed = 22;
  std::filesystem::create_directories("synth_c");
  auto c = GenerateDataset(cfg, "synth_c");
  REQUIRE(c.ok());
  CHECK(ReadBytes(a.value()[0].path) != ReadBytes(c.value()[0].path));
}

TEST_CASE("scene configuration files round-trip and reject unknown keys") {
  SceneConfig cfg;
  cfg.noise_std = 0.05;
  cfg.paths = 7;
  auto back = SceneConfig::FromConfig(cfg.ToConfig());
  REQUIRE(back.ok());
  CHECK(back->paths == 7);
  CHECK(back->noise_std == 0.05);
  auto kv = KeyValueConfig::Parse("paths = 3\nbogus = 1\n");
  REQUIRE(kv.ok());
  CHECK_FALSE(SceneConfig::FromConfig(kv.value()).ok());
}
