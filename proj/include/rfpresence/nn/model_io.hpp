#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rfpresence/core/kv_config.hpp"
#include "rfpresence/core/result.hpp"
#include "rfpresence/nn/model.hpp"

namespace rfpresence::nn {

inline constexpr std::uint16_t kModelFormatVersion = 1;

/// Model plus the free-form run metadata stored next to its spec.
struct LoadedModel {
  Model model;
  KeyValueConfig metadata;
};

/// "RFPM", u16 version, u8 variant tag, u32 length + spec text, u32 tensor
/// count, then per tensor: u16 rank, u32 dims, f32 data; trailing u32 CRC32 of
/// everything before it. Values are rounded to f32 on write.
std::vector<std::uint8_t> EncodeModel(Model &model, const KeyValueConfig &metadata);
Result<LoadedModel> DecodeModel(const std::vector<std::uint8_t> &bytes, const std::string &origin);

Status SaveModel(const std::string &path, Model &model, const KeyValueConfig &metadata);
Result<LoadedModel> LoadModel(const std::string &path);

} // namespace rfpresence::nn
