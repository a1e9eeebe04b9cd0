#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "rfpresence/csi/stream_io.hpp"

using namespace rfpresence;
using namespace rfpresence::csi;

TEST_CASE("frame layout is subcarrier-major, then receive, then transmit antenna") {
  const CsiShape s{56, 3, 3};
  CHECK(s.size() == 504);
  CHECK(s.Index(0, 0, 1) == 1);
  CHECK(s.Index(0, 1, 0) == 3);
  CHECK(s.Index(1, 0, 0) == 9);
  CHECK(s.Index(55, 2, 2) == 503);
}

TEST_CASE("down-selection keeps every fourth subcarrier starting at zero") {
  auto idx = SelectedSubcarriers(56, 14);
  REQUIRE(idx.ok());
  REQUIRE(idx->size() == 14);
  for (std::size_t i = 0; i < 14; ++i) {
    CHECK(idx.value()[i] == 4 * i);
  }
  CHECK(SelectedSubcarriers(56, 15).error().code == ErrorCode::kNonDivisibleSelection);
  CHECK(SelectedSubcarriers(10, 14).error().code == ErrorCode::kNonDivisibleSelection);

  const CsiShape s{56, 3, 3};
  auto frames = fixtures::RandomFrames(s, 1, 7);
  auto red = DownselectSubcarriers(frames[0], s, 14);
  REQUIRE(red.ok());
  CHECK(red->dims == std::array<std::size_t, 3>{14, 3, 3});
  for (std::size_t k = 0; k < 14; ++k) {
    for (std::size_t q = 0; q < 3; ++q) {
      for (std::size_t p = 0; p < 3; ++p) {
        CHECK(red.value()(k, q, p) == frames[0].at(s, 4 * k, q, p));
      }
    }
  }
}

TEST_CASE("a valid window stacks the selected entries along time") {
  const CsiShape s{56, 3, 3};
  const auto frames = fixtures::RandomFrames(s, 128, 3);
  auto w = ValidateWindow(frames, s, WindowSpec{});
  REQUIRE(w.ok());
  CHECK(w->x.dims == std::array<std::size_t, 4>{128, 14, 3, 3});
  CHECK(w->x(5, 2, 1, 0) == frames[5].at(s, 8, 1, 0));
  CHECK(w->timestamps_us.back() == 1'270'000);
}

TEST_CASE("window validation reports the violated condition") {
  const CsiShape s{56, 3, 3};
  const WindowSpec spec{};

  SUBCASE("wrong frame count") {
    const auto frames = fixtures::RandomFrames(s, 127, 1);
    CHECK(ValidateWindow(frames, s, spec).error().code == ErrorCode::kWrongFrameCount);
  }
  SUBCASE("zero magnitude on a selected subcarrier") {
    auto frames = fixtures::RandomFrames(s, 128, 1);
    frames[40].h[s.Index(12, 2, 1)] = Complex(0.0, 0.0);
    CHECK(ValidateWindow(frames, s, spec).error().code == ErrorCode::kZeroMagnitudeEntry);
  }
  SUBCASE("zero magnitude on a dropped subcarrier is harmless") {
    auto frames = fixtures::RandomFrames(s, 128, 1);
    frames[40].h[s.Index(13, 2, 1)] = Complex(0.0, 0.0);
    CHECK(ValidateWindow(frames, s, spec).ok());
  }
  SUBCASE("span too long") {
    const auto frames = fixtures::RandomFrames(s, 128, 1, 10'600);
    CHECK(ValidateWindow(frames, s, spec).error().code == ErrorCode::kSpanOutOfTolerance);
  }
  SUBCASE("span too short") {
    const auto frames = fixtures::RandomFrames(s, 128, 1, 9'400);
    CHECK(ValidateWindow(frames, s, spec).error().code == ErrorCode::kSpanOutOfTolerance);
  }
}

TEST_CASE("span tolerance boundary is inclusive") {
  const WindowSpec spec{};
  CHECK(spec.nominal_span_s == doctest::Approx(1.27));
  CHECK(spec.tol_s == doctest::Approx(0.064));
  CHECK(CheckSpan(0, 1'334'000, spec).ok());
  CHECK(CheckSpan(0, 1'206'000, spec).ok());
  CHECK_FALSE(CheckSpan(0, 1'334'001, spec).ok());
  CHECK_FALSE(CheckSpan(0, 1'205'999, spec).ok());
  CHECK_FALSE(CheckSpan(2'000'000, 1'000'000, spec).ok());
}

TEST_CASE("window spec scales with the frame interval") {
  const auto spec = WindowSpec::ForInterval(20.0, 64);
  CHECK(spec.frames == 64);
  CHECK(spec.nominal_span_s == doctest::Approx(1.26));
  CHECK(spec.tol_s == doctest::Approx(0.064 * 1.26 / 1.27));
}

TEST_CASE("stream files round-trip through the binary format") {
  const CsiShape s{56, 3, 3};
  StreamHeader h;
  h.shape = s;
  h.label = 1;
  h.day_id = "day-07";
  const auto frames = fixtures::RandomFrames(s, 5, 11);

  std::vector<std::uint8_t> bytes = EncodeStreamHeader(h);
  CHECK(bytes.size() == 4 + 2 * 4 + 1 + 2 + 6);
  for (const auto &f : frames) {
    EncodeFrame(f, bytes);
  }
  CHECK(bytes.size() == 21 + 5 * (8 + 504 * 8));

  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  auto reader = StreamReader::FromStream(in, "mem");
  REQUIRE(reader.ok());
  CHECK(reader.value()->header().day_id == "day-07");
  CHECK(reader.value()->header().label == std::optional<std::uint8_t>(1));
  auto all = ReadAllFrames(*reader.value());
  REQUIRE(all.ok());
  REQUIRE(all->size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(all.value()[i].timestamp_us == frames[i].timestamp_us);
    for (std::size_t e = 0; e < s.size(); ++e) {
      // Coefficients are stored as f32.
      CHECK(all.value()[i].h[e].real() == static_cast<double>(static_cast<float>(frames[i].h[e].real())));
      CHECK(all.value()[i].h[e].imag() == static_cast<double>(static_cast<float>(frames[i].h[e].imag())));
    }
  }
}

TEST_CASE("stream reader rejects malformed input with an offset") {
  const CsiShape s{56, 3, 3};
  StreamHeader h;
  h.shape = s;
  auto bytes = EncodeStreamHeader(h);
  const auto frames = fixtures::RandomFrames(s, 2, 1);
  EncodeFrame(frames[0], bytes);
  EncodeFrame(frames[1], bytes);

  SUBCASE("bad magic") {
    auto bad = bytes;
    bad[0] = 'X';
    std::istringstream in(std::string(bad.begin(), bad.end()));
    auto r = StreamReader::FromStream(in, "mem");
    REQUIRE_FALSE(r.ok());
    CHECK(r.error().code == ErrorCode::kParseError);
  }
  SUBCASE("truncated frame") {
    std::istringstream in(std::string(bytes.begin(), bytes.end() - 3));
    auto r = StreamReader::FromStream(in, "mem");
    REQUIRE(r.ok());
    auto all = ReadAllFrames(*r.value());
    REQUIRE_FALSE(all.ok());
    CHECK(all.error().code == ErrorCode::kParseError);
    CHECK(all.error().message.find("mem") != std::string::npos);
  }
  SUBCASE("non-increasing timestamps") {
    auto dup = EncodeStreamHeader(h);
    EncodeFrame(frames[1], dup);
    EncodeFrame(frames[0], dup);
    std::istringstream in(std::string(dup.begin(), dup.end()));
    auto r = StreamReader::FromStream(in, "mem");
    REQUIRE(r.ok());
    CHECK_FALSE(ReadAllFrames(*r.value()).ok());
  }
}

TEST_CASE("JSON-lines import produces the canonical stream") {
  std::ostringstream js;
  js << R"({"n_sc": 4, "n_r": 2, "n_t": 1, "label": 0, "day_id": "d1"})" << "\n";
  for (int i = 0; i < 3; ++i) {
    js << R"({"timestamp_us": )" << i * 10000 << R"(, "h": [[1,0],[0,1],[2,2],[3,-1],[1,1],[0.5,0],[1,2],[4,4]]})"
       << "\n";
  }
  const std::string path = "import_test.csi";
  std::istringstream in(js.str());
  auto n = ImportJsonLines(in, "mem.jsonl", path);
  REQUIRE(n.ok());
  CHECK(n.value() == 3);
  auto reader = StreamReader::Open(path);
  REQUIRE(reader.ok());
  CHECK(reader.value()->header().shape == CsiShape{4, 2, 1});
  CHECK(reader.value()->header().day_id == "d1");
  auto all = ReadAllFrames(*reader.value());
  REQUIRE(all.ok());
  CHECK(all->size() == 3);
  CHECK(all.value()[2].timestamp_us == 20000);
  CHECK(all.value()[0].h[3] == Complex(3.0, -1.0));

  std::istringstream bad(R"({"n_sc": 4, "n_r": 2, "n_t": 1})"
                         "\n"
                         R"({"timestamp_us": 0, "h": [[1,0]]})"
                         "\n");
  auto err = ImportJsonLines(bad, "bad.jsonl", "import_bad.csi");
  REQUIRE_FALSE(err.ok());
  CHECK(err.error().code == ErrorCode::kParseError);
  CHECK(err.error().message.find("bad.jsonl") != std::string::npos);
}
