#include "rfpresence/core/kv_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace rfpresence {

namespace {

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

} // namespace

Result<KeyValueConfig> KeyValueConfig::Parse(std::string_view text, std::string_view origin) {
  KeyValueConfig cfg;
  cfg.origin_ = std::string(origin);
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      return MakeError(ErrorCode::kParseError, std::string(origin) + ":" + std::to_string(line_no) +
                                                   ": expected 'key = value'");
    }
    const auto key = Trim(line.substr(0, eq));
    if (key.empty()) {
      return MakeError(ErrorCode::kParseError, std::string(origin) + ":" + std::to_string(line_no) + ": empty key");
    }
    cfg.entries_.emplace_back(std::string(key), std::string(Trim(line.substr(eq + 1))));
  }
  return cfg;
}

Result<KeyValueConfig> KeyValueConfig::Load(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    return MakeError(ErrorCode::kIoError, "cannot open config '" + path + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str(), path);
}

void KeyValueConfig::Set(std::string key, std::string value) {
  for (auto &[k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

void KeyValueConfig::Add(std::string key, std::string value) {
  entries_.emplace_back(std::move(key), std::move(value));
}

void KeyValueConfig::Erase(std::string_view key) {
  std::erase_if(entries_, [&](const auto &e) { return e.first == key; });
}

bool KeyValueConfig::Has(std::string_view key) const { return Get(key).has_value(); }

std::optional<std::string> KeyValueConfig::Get(std::string_view key) const {
  // Last assignment wins.
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->first == key) {
      return it->second;
    }
  }
  return std::nullopt;
}

std::vector<std::string> KeyValueConfig::GetAll(std::string_view key) const {
  std::vector<std::string> out;
  for (const auto &[k, v] : entries_) {
    if (k == key) {
      out.push_back(v);
    }
  }
  return out;
}

Result<double> KeyValueConfig::GetDouble(std::string_view key, double fallback) const {
  const auto raw = Get(key);
  if (!raw) {
    return fallback;
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(*raw, &used);
    if (used != raw->size()) {
      throw std::invalid_argument("trailing characters");
    }
    return v;
  } catch (const std::exception &) {
    return MakeError(ErrorCode::kParseError,
                     origin_ + ": key '" + std::string(key) + "' is not a number: '" + *raw + "'");
  }
}

Result<std::int64_t> KeyValueConfig::GetInt(std::string_view key, std::int64_t fallback) const {
  const auto raw = Get(key);
  if (!raw) {
    return fallback;
  }
  std::int64_t v = 0;
  const auto *end = raw->data() + raw->size();
  const auto [ptr, ec] = std::from_chars(raw->data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    return MakeError(ErrorCode::kParseError,
                     origin_ + ": key '" + std::string(key) + "' is not an integer: '" + *raw + "'");
  }
  return v;
}

std::string KeyValueConfig::GetString(std::string_view key, std::string fallback) const {
  auto raw = Get(key);
  return raw ? *raw : std::move(fallback);
}

std::string KeyValueConfig::Serialize() const {
  std::string out;
  for (const auto &[k, v] : entries_) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

} // namespace rfpresence
