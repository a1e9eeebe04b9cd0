#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rfpresence/core/kv_config.hpp"
#include "rfpresence/core/result.hpp"
#include "rfpresence/core/variant.hpp"

namespace rfpresence::cli {

// A run configuration is a KeyValueConfig whose `command` key names the
// subcommand. Every artifact embeds the resolved configuration, and feeding
// it back through --config reproduces the artifact.

/// Config file entries overridden by explicitly given flags. A flag key
/// replaces every file assignment of that key (repeated keys included).
/// A file without a `command` entry is an artifact; its "# key = value"
/// header is replayed instead.
Result<KeyValueConfig> MergeConfig(const std::optional<std::string> &config_path, const KeyValueConfig &flags);

/// Dispatches on the `command` key.
Status RunCommand(const KeyValueConfig &run, std::ostream &log);

Status Simulate(const KeyValueConfig &run, std::ostream &log);
Status Import(const KeyValueConfig &run, std::ostream &log);
Status TrainCommand(const KeyValueConfig &run, std::ostream &log);
Status EvalCommand(const KeyValueConfig &run, std::ostream &log);
Status Detect(const KeyValueConfig &run, std::ostream &log);
Status Dump(const KeyValueConfig &run, std::ostream &log);

/// "a-b,c-d" in seconds.
Result<std::vector<std::pair<double, double>>> ParseIntervals(const std::string &text);
/// Comma-separated list; empty items are dropped.
std::vector<std::string> SplitList(const std::string &text);
/// Stream files named directly or found (as *.csi, sorted) in listed directories.
Result<std::vector<std::string>> ExpandDataPaths(const std::vector<std::string> &entries);

/// Writes `body` preceded by the run configuration as '#' comment lines.
Status WriteWithConfig(const std::string &path, const KeyValueConfig &run, const std::string &body);

} // namespace rfpresence::cli
