#include "rfpresence/nn/model_io.hpp"

#include <cstdlib>

#include "rfpresence/core/binary_io.hpp"

namespace rfpresence::nn {

namespace {

constexpr char kMagic[] = "RFPM";
// Keys written by ModelSpec::WriteTo; metadata may not reuse them.
constexpr const char *kSeedKey = "seed";

} // namespace

std::vector<std::uint8_t> EncodeModel(Model &model, const KeyValueConfig &metadata) {
  KeyValueConfig kv;
  model.spec().WriteTo(kv);
  kv.Set(kSeedKey, std::to_string(model.seed()));
  for (const auto &[k, v] : metadata.entries()) {
    kv.Add("meta." + k, v);
  }
  const std::string text = kv.Serialize();

  ByteWriter w;
  w.Raw(std::string_view(kMagic, 4));
  w.U16(kModelFormatVersion);
  w.U8(static_cast<std::uint8_t>(model.spec().variant));
  w.U32(static_cast<std::uint32_t>(text.size()));
  w.Raw(text);
  const auto tensors = model.NamedTensors();
  w.U32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto &[name, t] : tensors) {
    w.U16(static_cast<std::uint16_t>(t->rank()));
    for (std::size_t d : t->shape) {
      w.U32(static_cast<std::uint32_t>(d));
    }
    for (double v : t->data) {
      w.F32(static_cast<float>(v));
    }
  }
  const std::uint32_t crc = Crc32(w.bytes());
  w.U32(crc);
  return w.Take();
}

Result<LoadedModel> DecodeModel(const std::vector<std::uint8_t> &bytes, const std::string &origin) {
  auto parse_error = [&origin](std::size_t offset, const std::string &what) {
    return MakeError(ErrorCode::kParseError, origin + " @" + std::to_string(offset) + ": " + what);
  };
  if (bytes.size() < 4 + 2 + 1 + 4 + 4 + 4) {
    return parse_error(0, "file too short for a model");
  }
  const std::size_t payload = bytes.size() - 4;
  const std::span<const std::uint8_t> all(bytes);
  ByteReader tail(all.subspan(payload));
  const std::uint32_t stored_crc = tail.U32();
  if (Crc32(all.first(payload)) != stored_crc) {
    return MakeError(ErrorCode::kChecksumMismatch, origin + ": model checksum mismatch");
  }
  ByteReader r(all.first(payload));
  if (r.String(4) != std::string_view(kMagic, 4)) {
    return parse_error(0, "bad magic, expected RFPM");
  }
  const std::uint16_t version = r.U16();
  if (version != kModelFormatVersion) {
    return parse_error(4, "unsupported model format version " + std::to_string(version));
  }
  const std::uint8_t tag = r.U8();
  const auto variant = VariantFromTag(tag);
  if (!variant) {
    return parse_error(6, "unknown variant tag " + std::to_string(tag));
  }
  const std::uint32_t text_len = r.U32();
  const std::string text = r.String(text_len);
  if (r.failed()) {
    return parse_error(r.offset(), "truncated architecture text");
  }
  auto kv = KeyValueConfig::Parse(text, origin);
  if (!kv.ok()) {
    return kv.error();
  }
  auto spec = ModelSpec::ReadFrom(kv.value());
  if (!spec.ok()) {
    return spec.error();
  }
  if (spec->variant != *variant) {
    return MakeError(ErrorCode::kVariantMismatch, origin + ": variant tag disagrees with the architecture text");
  }
  std::uint64_t seed = 0;
  {
    const std::string seed_text = kv->GetString(kSeedKey, "0");
    char *end = nullptr;
    seed = std::strtoull(seed_text.c_str(), &end, 10);
    if (seed_text.empty() || *end != '\0') {
      return parse_error(0, "invalid seed '" + seed_text + "'");
    }
  }
  auto model = Model::Create(spec.value(), seed);
  if (!model.ok()) {
    return model.error();
  }
  auto tensors = model->NamedTensors();
  const std::uint32_t count = r.U32();
  if (count != tensors.size()) {
    return parse_error(r.offset(), "expected " + std::to_string(tensors.size()) + " tensors, file has " +
                                       std::to_string(count));
  }
  for (auto &[name, t] : tensors) {
    const std::size_t at = r.offset();
    const std::uint16_t rank = r.U16();
    std::vector<std::size_t> shape(rank);
    for (auto &d : shape) {
      d = r.U32();
    }
    if (r.failed()) {
      return parse_error(at, "truncated tensor header");
    }
    if (shape != t->shape) {
      return MakeError(ErrorCode::kShapeMismatch, origin + ": tensor " + name + " has shape " + ShapeString(shape) +
                                                      ", spec requires " + ShapeString(t->shape));
    }
    for (auto &v : t->data) {
      v = static_cast<double>(r.F32());
    }
    if (r.failed()) {
      return parse_error(at, "truncated tensor data for " + name);
    }
  }
  if (r.remaining() != 0) {
    return parse_error(r.offset(), "trailing bytes after tensors");
  }
  LoadedModel out{std::move(model).value(), {}};
  for (const auto &[k, v] : kv->entries()) {
    if (k.rfind("meta.", 0) == 0) {
      out.metadata.Add(k.substr(5), v);
    }
  }
  return out;
}

Status SaveModel(const std::string &path, Model &model, const KeyValueConfig &metadata) {
  const auto bytes = EncodeModel(model, metadata);
  return WriteFileBytes(path, bytes);
}

Result<LoadedModel> LoadModel(const std::string &path) {
  auto bytes = ReadFileBytes(path);
  if (!bytes.ok()) {
    return bytes.error();
  }
  return DecodeModel(bytes.value(), path);
}

} // namespace rfpresence::nn
