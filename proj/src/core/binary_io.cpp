#include "rfpresence/core/binary_io.hpp"

#include <zlib.h>

#include <fstream>
#include <iterator>

namespace rfpresence {

std::uint32_t Crc32(std::span<const std::uint8_t> data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  constexpr std::size_t kChunk = 1U << 30;
  std::size_t pos = 0;
  while (pos < data.size()) {
    const std::size_t n = std::min(kChunk, data.size() - pos);
    crc = crc32(crc, data.data() + pos, static_cast<uInt>(n));
    pos += n;
  }
  return static_cast<std::uint32_t>(crc);
}

Result<std::vector<std::uint8_t>> ReadFileBytes(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return MakeError(ErrorCode::kIoError, "cannot open '" + path + "' for reading");
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) {
    return MakeError(ErrorCode::kIoError, "read failed for '" + path + "'");
  }
  return bytes;
}

Status WriteFileBytes(const std::string &path, std::span<const std::uint8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    return MakeError(ErrorCode::kIoError, "cannot open '" + path + "' for writing");
  }
  out.write(reinterpret_cast<const char *>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) {
    return MakeError(ErrorCode::kIoError, "write failed for '" + path + "'");
  }
  return {};
}

} // namespace rfpresence
