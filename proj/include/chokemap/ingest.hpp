#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chokemap/intraas.hpp"
#include "chokemap/model.hpp"

namespace chokemap {

/// Collects non-fatal loader warnings.
struct Diagnostics {
  std::vector<std::string> warnings;

  void warn(std::string message) { warnings.push_back(std::move(message)); }
};

/// Resolver inventory: AS -> prefix -> number of resolvers seen in it.
using ResolverInventory = std::map<Asn, std::map<Prefix, std::uint64_t>>;

struct KnownPaths {
  std::vector<AsPath> paths;  // sorted, deduplicated
  std::size_t dropped_loops = 0;
};

// Line formats (all `#`-commented, `|`-separated unless noted):
//   relationships    <asn>|<asn>|<rel>     rel -1 = provider|customer, 0 = peer
//   known paths      <prefix> <asn> ... <asn>   (space separated, source first)
//   prefix origins   <prefix>|<asn>
//   countries        <asn>|<CC>
//   resolvers        <prefix>|<asn>|<count>
//   targets          <prefix>
std::vector<AsEdge> load_relationships(std::istream& in, Diagnostics* diag = nullptr);
KnownPaths load_known_paths(std::istream& in, Diagnostics* diag = nullptr);
std::map<Prefix, std::set<Asn>> load_prefix_origins(std::istream& in, Diagnostics* diag = nullptr);
std::map<Asn, std::string> load_countries(std::istream& in, Diagnostics* diag = nullptr);
ResolverInventory load_resolver_inventory(std::istream& in, Diagnostics* diag = nullptr);
std::vector<Prefix> load_targets(std::istream& in, Diagnostics* diag = nullptr);

void write_relationships(std::ostream& out, const std::vector<AsEdge>& edges);
void write_known_paths(std::ostream& out, const std::vector<AsPath>& paths);
void write_prefix_origins(std::ostream& out, const std::map<Prefix, std::vector<Asn>>& origins);
void write_countries(std::ostream& out, const std::map<Asn, std::string>& countries);
void write_resolver_inventory(std::ostream& out, const ResolverInventory& inventory);
void write_targets(std::ostream& out, const std::vector<Prefix>& targets);

struct DatasetBundle {
  AsGraph graph;
  std::vector<AsPath> known_paths;
  ResolverInventory resolver_inventory;
  std::vector<RouterTrace> router_traces;
  AliasMap aliases;
  std::vector<Prefix> target_prefixes;

  bool operator==(const DatasetBundle&) const = default;
};

/// Raw loader outputs, before cross-references are resolved.
struct DatasetParts {
  std::vector<AsEdge> edges;
  std::vector<AsPath> known_paths;
  std::map<Prefix, std::set<Asn>> origins;
  std::map<Asn, std::string> countries;
  ResolverInventory resolver_inventory;
  std::vector<RouterTrace> router_traces;
  AliasMap aliases;
  std::vector<Prefix> target_prefixes;
};

/// Builds the graph and resolves cross-references: ASNs seen only in known
/// paths become isolated nodes (with a warning) and resolver prefixes are
/// registered as origins of their AS.
DatasetBundle assemble_bundle(DatasetParts parts, Diagnostics* diag = nullptr);

struct DatasetPaths {
  std::optional<std::filesystem::path> relationships;
  std::optional<std::filesystem::path> known_paths;
  std::optional<std::filesystem::path> prefix_origins;
  std::optional<std::filesystem::path> countries;
  std::optional<std::filesystem::path> resolvers;
  std::optional<std::filesystem::path> router_traces;
  std::optional<std::filesystem::path> aliases;
  std::optional<std::filesystem::path> targets;

  /// Picks up the conventional file names present in `dir`.
  static DatasetPaths from_directory(const std::filesystem::path& dir);
  std::vector<std::filesystem::path> all() const;
};

inline constexpr const char* kRelationshipsFile = "relationships.txt";
inline constexpr const char* kKnownPathsFile = "known_paths.txt";
inline constexpr const char* kPrefixOriginsFile = "prefix_origins.txt";
inline constexpr const char* kCountriesFile = "countries.txt";
inline constexpr const char* kResolversFile = "resolvers.txt";
inline constexpr const char* kRouterTracesFile = "router_traces.txt";
inline constexpr const char* kAliasesFile = "aliases.txt";
inline constexpr const char* kTargetsFile = "targets.txt";

/// Loads every configured file. Errors are annotated with the file name.
DatasetBundle load_bundle(const DatasetPaths& paths, Diagnostics* diag = nullptr);

/// Writes a bundle in the conventional layout. Reloading yields an equal bundle.
void write_bundle(const std::filesystem::path& dir, const DatasetBundle& bundle);

}  // namespace chokemap
