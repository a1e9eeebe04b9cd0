#include "rfpresence/csi/stream_io.hpp"

#include <cstring>
#include <istream>
#include <sstream>

#include <json.hpp>

#include "rfpresence/core/binary_io.hpp"

namespace rfpresence::csi {

namespace {

std::string At(const std::string &name, std::uint64_t offset) {
  return name + " @" + std::to_string(offset);
}

float LoadF32(const std::uint8_t *p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  float v = 0.0F;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

} // namespace

std::vector<std::uint8_t> EncodeStreamHeader(const StreamHeader &header) {
  ByteWriter w;
  w.Raw(std::string_view(kStreamMagic, 4));
  w.U16(header.shape.n_sc);
  w.U16(header.shape.n_r);
  w.U16(header.shape.n_t);
  w.U16(header.label ? kFlagLabelPresent : 0);
  w.U8(header.label ? *header.label : kUnlabeled);
  w.U16(static_cast<std::uint16_t>(header.day_id.size()));
  w.Raw(header.day_id);
  return w.Take();
}

void EncodeFrame(const CsiFrame &frame, std::vector<std::uint8_t> &out) {
  ByteWriter w;
  w.U64(frame.timestamp_us);
  for (const auto &c : frame.h) {
    w.F32(static_cast<float>(c.real()));
    w.F32(static_cast<float>(c.imag()));
  }
  const auto &b = w.bytes();
  out.insert(out.end(), b.begin(), b.end());
}

Result<std::optional<CsiFrame>> VectorSource::Next() {
  if (pos_ >= frames_.size()) {
    return std::optional<CsiFrame>{};
  }
  return std::optional<CsiFrame>{frames_[pos_++]};
}

Result<std::unique_ptr<StreamReader>> StreamReader::Open(const std::string &path) {
  auto file = std::make_unique<std::ifstream>(path, std::ios::binary);
  if (!*file) {
    return MakeError(ErrorCode::kIoError, "cannot open stream '" + path + "'");
  }
  std::unique_ptr<StreamReader> r(new StreamReader());
  r->owned_ = std::move(file);
  r->in_ = r->owned_.get();
  r->name_ = path;
  if (auto st = r->ReadHeader(); !st.ok()) {
    return st.error();
  }
  return r;
}

Result<std::unique_ptr<StreamReader>> StreamReader::FromStream(std::istream &in, std::string name) {
  std::unique_ptr<StreamReader> r(new StreamReader());
  r->in_ = &in;
  r->name_ = std::move(name);
  if (auto st = r->ReadHeader(); !st.ok()) {
    return st.error();
  }
  return r;
}

bool StreamReader::ReadExact(std::uint8_t *dst, std::size_t n, bool &clean_eof) {
  in_->read(reinterpret_cast<char *>(dst), static_cast<std::streamsize>(n));
  const auto got = static_cast<std::size_t>(in_->gcount());
  clean_eof = got == 0;
  offset_ += got;
  return got == n;
}

Status StreamReader::ReadHeader() {
  std::uint8_t fixed[13];
  bool eof = false;
  if (!ReadExact(fixed, sizeof fixed, eof)) {
    return MakeError(ErrorCode::kParseError, At(name_, offset_) + ": truncated stream header");
  }
  if (std::memcmp(fixed, kStreamMagic, 4) != 0) {
    return MakeError(ErrorCode::kParseError, At(name_, 0) + ": bad magic, expected CSI1");
  }
  ByteReader r(std::span<const std::uint8_t>(fixed + 4, 9));
  header_.shape.n_sc = r.U16();
  header_.shape.n_r = r.U16();
  header_.shape.n_t = r.U16();
  const std::uint16_t flags = r.U16();
  const std::uint8_t label = r.U8();
  if (flags & kFlagLabelPresent) {
    if (label > 1) {
      return MakeError(ErrorCode::kParseError, At(name_, 12) + ": label flag set but label is " +
                                                   std::to_string(label));
    }
    header_.label = label;
  }
  std::uint8_t len_bytes[2];
  if (!ReadExact(len_bytes, 2, eof)) {
    return MakeError(ErrorCode::kParseError, At(name_, offset_) + ": truncated day_id length");
  }
  const std::size_t len = static_cast<std::size_t>(len_bytes[0]) | (static_cast<std::size_t>(len_bytes[1]) << 8);
  header_.day_id.resize(len);
  if (len > 0 && !ReadExact(reinterpret_cast<std::uint8_t *>(header_.day_id.data()), len, eof)) {
    return MakeError(ErrorCode::kParseError, At(name_, offset_) + ": truncated day_id");
  }
  if (header_.shape.n_sc == 0 || header_.shape.n_r == 0 || header_.shape.n_t == 0) {
    return MakeError(ErrorCode::kParseError, At(name_, 4) + ": zero dimension in header");
  }
  buf_.resize(8 + header_.shape.size() * 8);
  return {};
}

Result<std::optional<CsiFrame>> StreamReader::Next() {
  const std::uint64_t start = offset_;
  bool eof = false;
  if (!ReadExact(buf_.data(), buf_.size(), eof)) {
    if (eof) {
      return std::optional<CsiFrame>{};
    }
    return MakeError(ErrorCode::kParseError, At(name_, start) + ": truncated frame");
  }
  CsiFrame f;
  ByteReader r(std::span<const std::uint8_t>(buf_.data(), 8));
  f.timestamp_us = r.U64();
  if (last_ts_ && f.timestamp_us <= *last_ts_) {
    return MakeError(ErrorCode::kParseError, At(name_, start) + ": timestamp " + std::to_string(f.timestamp_us) +
                                                 " not after " + std::to_string(*last_ts_));
  }
  last_ts_ = f.timestamp_us;
  const std::size_t n = header_.shape.size();
  f.h.resize(n);
  const std::uint8_t *p = buf_.data() + 8;
  for (std::size_t i = 0; i < n; ++i, p += 8) {
    f.h[i] = Complex(LoadF32(p), LoadF32(p + 4));
  }
  return std::optional<CsiFrame>{std::move(f)};
}

Result<std::unique_ptr<StreamWriter>> StreamWriter::Open(const std::string &path, const StreamHeader &header) {
  if (header.shape.n_sc == 0 || header.shape.n_r == 0 || header.shape.n_t == 0) {
    return MakeError(ErrorCode::kInvalidArgument, "stream dimensions must be positive");
  }
  if (header.day_id.size() > 0xFFFF) {
    return MakeError(ErrorCode::kInvalidArgument, "day_id longer than 65535 bytes");
  }
  std::unique_ptr<StreamWriter> w(new StreamWriter());
  w->out_.open(path, std::ios::binary | std::ios::trunc);
  if (!w->out_) {
    return MakeError(ErrorCode::kIoError, "cannot open '" + path + "' for writing");
  }
  w->path_ = path;
  w->header_ = header;
  w->buf_ = EncodeStreamHeader(header);
  return w;
}

Status StreamWriter::Append(const CsiFrame &frame) {
  if (frame.h.size() != header_.shape.size()) {
    return MakeError(ErrorCode::kShapeMismatch, "frame size does not match stream header");
  }
  if (last_ts_ && frame.timestamp_us <= *last_ts_) {
    return MakeError(ErrorCode::kInvalidArgument, "timestamps must be strictly increasing");
  }
  last_ts_ = frame.timestamp_us;
  EncodeFrame(frame, buf_);
  if (buf_.size() > (1U << 20)) {
    return Flush();
  }
  return {};
}

Status StreamWriter::Flush() {
  out_.write(reinterpret_cast<const char *>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
  buf_.clear();
  if (!out_) {
    return MakeError(ErrorCode::kIoError, "write failed for '" + path_ + "'");
  }
  return {};
}

Status StreamWriter::Close() {
  if (closed_) {
    return {};
  }
  closed_ = true;
  if (auto st = Flush(); !st.ok()) {
    return st;
  }
  out_.close();
  if (!out_) {
    return MakeError(ErrorCode::kIoError, "close failed for '" + path_ + "'");
  }
  return {};
}

StreamWriter::~StreamWriter() { (void)Close(); }

Status WriteStreamFile(const std::string &path, const StreamHeader &header, const std::vector<CsiFrame> &frames) {
  auto w = StreamWriter::Open(path, header);
  if (!w.ok()) {
    return w.error();
  }
  for (const auto &f : frames) {
    if (auto st = w.value()->Append(f); !st.ok()) {
      return st;
    }
  }
  return w.value()->Close();
}

Result<std::vector<CsiFrame>> ReadAllFrames(FrameSource &source) {
  std::vector<CsiFrame> frames;
  while (true) {
    auto next = source.Next();
    if (!next.ok()) {
      return next.error();
    }
    if (!next.value()) {
      break;
    }
    frames.push_back(std::move(*next.value()));
  }
  return frames;
}

Result<std::size_t> ImportJsonLines(std::istream &in, const std::string &origin, const std::string &out_path) {
  using nlohmann::json;
  std::string line;
  std::size_t line_no = 0;
  auto where = [&] { return origin + ":" + std::to_string(line_no); };

  std::optional<StreamHeader> header;
  std::unique_ptr<StreamWriter> writer;
  std::size_t frames = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error &e) {
      return MakeError(ErrorCode::kParseError, where() + ": " + e.what());
    }
    try {
      if (!header) {
        StreamHeader h;
        h.shape.n_sc = obj.at("n_sc").get<std::uint16_t>();
        h.shape.n_r = obj.at("n_r").get<std::uint16_t>();
        h.shape.n_t = obj.at("n_t").get<std::uint16_t>();
        if (obj.contains("label") && !obj["label"].is_null()) {
          const int label = obj["label"].get<int>();
          if (label != 0 && label != 1) {
            return MakeError(ErrorCode::kParseError, where() + ": label must be 0, 1 or null");
          }
          h.label = static_cast<std::uint8_t>(label);
        }
        h.day_id = obj.value("day_id", std::string{});
        h.sample_interval_ms = obj.value("sample_interval_ms", kDefaultIntervalMs);
        auto w = StreamWriter::Open(out_path, h);
        if (!w.ok()) {
          return w.error();
        }
        writer = std::move(w).value();
        header = h;
        continue;
      }
      CsiFrame f;
      f.timestamp_us = obj.at("timestamp_us").get<std::uint64_t>();
      const auto &h = obj.at("h");
      if (!h.is_array() || h.size() != header->shape.size()) {
        return MakeError(ErrorCode::kParseError, where() + ": expected " + std::to_string(header->shape.size()) +
                                                     " coefficients");
      }
      f.h.reserve(h.size());
      for (const auto &pair : h) {
        if (!pair.is_array() || pair.size() != 2) {
          return MakeError(ErrorCode::kParseError, where() + ": coefficient must be [re, im]");
        }
        f.h.emplace_back(static_cast<float>(pair[0].get<double>()), static_cast<float>(pair[1].get<double>()));
      }
      if (auto st = writer->Append(f); !st.ok()) {
        return MakeError(ErrorCode::kParseError, where() + ": " + st.error().message);
      }
      ++frames;
    } catch (const json::exception &e) {
      return MakeError(ErrorCode::kParseError, where() + ": " + e.what());
    }
  }
  if (!header) {
    return MakeError(ErrorCode::kParseError, origin + ": missing header line");
  }
  if (auto st = writer->Close(); !st.ok()) {
    return st.error();
  }
  return frames;
}

} // namespace rfpresence::csi
