#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rllg/harness.hpp"

namespace rllg {

using KvMap = std::map<std::string, std::string>;

/// Flat `key = value` text (# comments); also accepts the flat JSON object
/// emitted as config.json.
KvMap parse_kv_text(const std::string& text, const std::string& origin);
KvMap parse_kv_file(const std::filesystem::path& path);

/// Applies keys onto a config; unknown keys throw. Keys prefixed "env." land
/// in env_overrides.
RunConfig apply_kv(RunConfig base, const KvMap& kv, const std::string& origin);

KvMap config_to_kv(const RunConfig& cfg);

/// Resolved config as a flat JSON object (sorted keys, stable bytes).
std::string config_json(const RunConfig& cfg);
void write_config_json(const RunConfig& cfg, const std::filesystem::path& path);

/// Benchmark suite: shared keys at the top, one [agent <id> (as <label>)]
/// section per entry with per-entry overrides. `seeds` is a comma list.
struct SuiteEntry {
  std::string label;
  RunConfig config;  // pre-resolution
};
std::vector<SuiteEntry> parse_suite(const std::filesystem::path& path,
                                    const RunConfig& base);

}  // namespace rllg
