#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rfpresence/core/result.hpp"

namespace rfpresence {

/// Plain `key = value` text file. `#` starts a comment; keys may repeat
/// (used for file lists in run manifests).
class KeyValueConfig {
 public:
  static Result<KeyValueConfig> Parse(std::string_view text, std::string_view origin = "<memory>");
  static Result<KeyValueConfig> Load(const std::string &path);

  void Set(std::string key, std::string value);
  void Add(std::string key, std::string value);
  /// Drops every assignment of `key`.
  void Erase(std::string_view key);

  [[nodiscard]] bool Has(std::string_view key) const;
  [[nodiscard]] std::optional<std::string> Get(std::string_view key) const;
  [[nodiscard]] std::vector<std::string> GetAll(std::string_view key) const;

  Result<double> GetDouble(std::string_view key, double fallback) const;
  Result<std::int64_t> GetInt(std::string_view key, std::int64_t fallback) const;
  [[nodiscard]] std::string GetString(std::string_view key, std::string fallback) const;

  [[nodiscard]] const std::vector<std::pair<std::string, std::string>> &entries() const { return entries_; }
  [[nodiscard]] std::string Serialize() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::string origin_{"<memory>"};
};

} // namespace rfpresence
