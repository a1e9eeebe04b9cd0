#pragma once

#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rfpresence/core/result.hpp"
#include "rfpresence/csi/types.hpp"

namespace rfpresence::csi {

// Canonical CSI stream file, little-endian:
//   "CSI1" | u16 n_sc | u16 n_r | u16 n_t | u16 flags (bit0 = label present)
//   | u8 label (0/1/255) | u16 day_id length | day_id UTF-8
//   then per frame: u64 timestamp_us | n_sc*n_r*n_t x (f32 re, f32 im)
inline constexpr char kStreamMagic[4] = {'C', 'S', 'I', '1'};
inline constexpr std::uint16_t kFlagLabelPresent = 0x1;
inline constexpr std::uint8_t kUnlabeled = 255;

std::vector<std::uint8_t> EncodeStreamHeader(const StreamHeader &header);
void EncodeFrame(const CsiFrame &frame, std::vector<std::uint8_t> &out);

/// Pull-based frame producer shared by file readers and the simulator.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  [[nodiscard]] virtual const StreamHeader &header() const = 0;
  /// Next frame, std::nullopt at end of stream.
  virtual Result<std::optional<CsiFrame>> Next() = 0;
};

/// Serves frames from memory.
class VectorSource final : public FrameSource {
 public:
  VectorSource(StreamHeader header, std::vector<CsiFrame> frames)
      : header_(std::move(header)), frames_(std::move(frames)) {}

  [[nodiscard]] const StreamHeader &header() const override { return header_; }
  Result<std::optional<CsiFrame>> Next() override;

 private:
  StreamHeader header_;
  std::vector<CsiFrame> frames_;
  std::size_t pos_{0};
};

/// Incremental reader over a file or any binary istream (e.g. stdin).
class StreamReader final : public FrameSource {
 public:
  static Result<std::unique_ptr<StreamReader>> Open(const std::string &path);
  static Result<std::unique_ptr<StreamReader>> FromStream(std::istream &in, std::string name);

  [[nodiscard]] const StreamHeader &header() const override { return header_; }
  Result<std::optional<CsiFrame>> Next() override;
  [[nodiscard]] std::uint64_t offset() const { return offset_; }

 private:
  StreamReader() = default;
  Status ReadHeader();
  bool ReadExact(std::uint8_t *dst, std::size_t n, bool &clean_eof);

  std::unique_ptr<std::ifstream> owned_;
  std::istream *in_{nullptr};
  std::string name_;
  StreamHeader header_;
  std::uint64_t offset_{0};
  std::optional<std::uint64_t> last_ts_;
  std::vector<std::uint8_t> buf_;
};

/// Buffered writer. Timestamps must be strictly increasing.
class StreamWriter {
 public:
  static Result<std::unique_ptr<StreamWriter>> Open(const std::string &path, const StreamHeader &header);
  Status Append(const CsiFrame &frame);
  Status Close();
  ~StreamWriter();

  StreamWriter(const StreamWriter &) = delete;
  StreamWriter &operator=(const StreamWriter &) = delete;

 private:
  StreamWriter() = default;
  Status Flush();

  std::ofstream out_;
  std::string path_;
  StreamHeader header_;
  std::optional<std::uint64_t> last_ts_;
  std::vector<std::uint8_t> buf_;
  bool closed_{false};
};

Status WriteStreamFile(const std::string &path, const StreamHeader &header, const std::vector<CsiFrame> &frames);
Result<std::vector<CsiFrame>> ReadAllFrames(FrameSource &source);

/// Converts a JSON-lines CSI dump to the canonical binary file. The first
/// line is the header object {"n_sc","n_r","n_t","label"?,"day_id"?,
/// "sample_interval_ms"?}; each further line is a frame object
/// {"timestamp_us", "h": [[re, im], ...]} in canonical coefficient order.
/// Returns the number of frames written.
Result<std::size_t> ImportJsonLines(std::istream &in, const std::string &origin, const std::string &out_path);

} // namespace rfpresence::csi
