#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "chokemap/chokepoint.hpp"
#include "chokemap/dnsmap.hpp"
#include "chokemap/hijack.hpp"
#include "chokemap/intraas.hpp"
#include "chokemap/probe.hpp"

namespace chokemap {

std::string tool_version();

std::string sha256_hex(std::string_view data);
/// Throws Io when the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

/// Rounds to four decimals, the precision of every reported fraction.
double round4(double value);

/// Stable public name for a router: "r-" plus 16 hex digits of its SHA-256.
std::string hash_router_id(const RouterId& id);

/// Reproducibility block embedded in every report.
struct RunMetadata {
  std::string command;
  /// Effective settings after config-file and flag merging.
  std::map<std::string, std::string> config;
  /// Dataset file name -> SHA-256.
  std::map<std::string, std::string> datasets;
  std::optional<std::string> timestamp;

  /// SHA-256 over the canonical `key=value\n` rendering of `config`.
  std::string config_hash() const;
  nlohmann::json to_json() const;
};

/// ISO-8601 UTC time of the call.
std::string utc_timestamp();

nlohmann::json to_json(const CoverageReport& report);
nlohmann::json to_json(const CollateralReport& report);
nlohmann::json to_json(const RouterSelection& selection, bool hash_ids = true);
nlohmann::json to_json(const HijackOutcome& outcome);
nlohmann::json to_json(const AttackerSummary& summary);
nlohmann::json to_json(const ResolverTargetSet& targets);
nlohmann::json to_json(const DnsProbeResult& result);
nlohmann::json to_json(const UrlResult& result);
nlohmann::json to_json(const ProbeSummary& summary);

nlohmann::json path_json(const std::vector<Asn>& hops);

/// Two-space indented JSON with a trailing newline. Throws Io.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace chokemap
