#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chokemap/model.hpp"

namespace chokemap {

struct Diagnostics;

/// Router-level sub-path of one traceroute, restricted to hops inside `as`.
/// A hop is an IPv4 address or "*" for a non-responding router.
struct RouterTrace {
  Asn as;
  std::string trace_id;
  std::vector<std::string> hops;

  bool operator==(const RouterTrace&) const = default;
};

/// Alias-resolution result: interface IP -> canonical router id.
class AliasMap {
 public:
  /// Throws AliasConflict when an IP is listed under two routers.
  void add_router(const std::string& router_id, const std::vector<std::string>& ips);

  std::optional<std::string> router_of(const std::string& ip) const;
  /// router id -> member IPs, sorted.
  std::map<std::string, std::set<std::string>> groups() const;
  std::size_t size() const noexcept { return ip_to_router_.size(); }

  bool operator==(const AliasMap&) const = default;

 private:
  std::map<std::string, std::string> ip_to_router_;
};

using RouterId = std::string;
using RouterPath = std::vector<RouterId>;

/// Router paths of one AS after alias collapsing.
struct AsRouterPaths {
  Asn as;
  std::vector<RouterPath> paths;
};

/// Rewrites trace hops to router ids, collapses consecutive duplicates and
/// replaces each `*` with a placeholder unique to its trace position.
/// Result is ordered by ASN, paths within an AS by trace id.
std::vector<AsRouterPaths> build_router_topology(const std::vector<RouterTrace>& traces, const AliasMap& aliases);

struct EdgeCoreSplit {
  std::set<RouterId> edge;
  std::set<RouterId> core;
};

/// Edge routers are first or last hops of some path; all others are core.
EdgeCoreSplit classify_edge_core(const std::vector<RouterPath>& paths);

/// Number of paths each router appears on.
std::map<RouterId, std::size_t> router_path_counts(const std::vector<RouterPath>& paths);

/// Shortest frequency-ranked prefix of routers whose union of covered paths
/// reaches `threshold` of all paths. Ranking: descending path count, then
/// ascending router id.
std::vector<RouterId> heavy_hitters(const std::vector<RouterPath>& paths, double threshold = 0.90);

/// Fraction of paths touching at least one router of `routers`.
double path_coverage(const std::vector<RouterPath>& paths, const std::set<RouterId>& routers);

enum class SelectionRule { EdgeSet, HeavyHitterSet };

std::string_view to_string(SelectionRule rule);

/// The edge-versus-heavy-hitter decision taken on counts alone.
struct RuleDecision {
  SelectionRule rule;
  std::size_t required;
};

RuleDecision select_filter_routers(std::size_t edge_count, std::size_t heavy_hitter_count);

struct RouterSelection {
  Asn as;
  std::size_t edge_count = 0;
  std::size_t core_count = 0;
  std::size_t heavy_hitter_count = 0;
  std::set<RouterId> selected;
  SelectionRule rule = SelectionRule::EdgeSet;
  double coverage_fraction = 0.0;
  std::size_t path_count = 0;
};

RouterSelection select_filter_routers(Asn as, const EdgeCoreSplit& split, const std::vector<RouterId>& heavy,
                                      const std::vector<RouterPath>& paths);

/// classify + heavy_hitters + select for every AS in the topology.
std::vector<RouterSelection> analyze_routers(const std::vector<AsRouterPaths>& topology, double threshold = 0.90);

// Formats: `<asn>|<trace-id>|<ip_or_*>,...` and `<router-id>|<ip>,<ip>,...`.
std::vector<RouterTrace> load_router_traces(std::istream& in, Diagnostics* diag = nullptr);
AliasMap load_aliases(std::istream& in, Diagnostics* diag = nullptr);
void write_router_traces(std::ostream& out, const std::vector<RouterTrace>& traces);
void write_aliases(std::ostream& out, const AliasMap& aliases);

}  // namespace chokemap
