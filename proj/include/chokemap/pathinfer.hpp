#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <span>
#include <vector>

#include "chokemap/model.hpp"

namespace chokemap {

/// Best route of every AS that can reach one target, sorted by source ASN.
struct TargetRoutes {
  Prefix target;
  std::vector<InferredRoute> routes;

  const InferredRoute* find(Asn source) const;
  bool operator==(const TargetRoutes&) const = default;
};

struct InferenceStats {
  std::size_t known_paths_used = 0;
  /// Known paths that are not valley-free (or use links missing from the
  /// graph). They are kept at their own source AS only.
  std::size_t known_policy_violations = 0;
  /// Known paths whose target is not requested or whose last hop is not an
  /// origin of the target.
  std::size_t known_paths_ignored = 0;

  bool operator==(const InferenceStats&) const = default;
};

class RoutingTable {
 public:
  RoutingTable() = default;
  explicit RoutingTable(std::vector<TargetRoutes> per_target, InferenceStats stats = {});

  std::span<const TargetRoutes> targets() const noexcept { return per_target_; }
  const TargetRoutes* find(const Prefix& target) const;
  const InferredRoute* find(const Prefix& target, Asn source) const;
  std::size_t route_count() const;
  const InferenceStats& stats() const noexcept { return stats_; }

  bool operator==(const RoutingTable& other) const { return per_target_ == other.per_target_; }

 private:
  std::vector<TargetRoutes> per_target_;  // sorted by target
  InferenceStats stats_;
};

struct InferenceOptions {
  unsigned jobs = 1;
};

/// Best valley-free route from every AS to each target.
///
/// Routes spread from the origin set in three stages: customer routes climb
/// customer->provider links, customer routes (and origins) cross at most one
/// peer link, and every route descends provider->customer links. Each AS
/// keeps one route, preferring customer over peer over provider, then fewer
/// hops, then a known-path candidate over an inferred one, then the lowest
/// next-hop ASN. Every suffix of a known path to a target seeds a candidate
/// at its first AS. Throws UnknownTarget for prefixes without an origin.
RoutingTable infer_routes(const AsGraph& graph, std::span<const AsPath> known, std::span<const Prefix> targets,
                          const InferenceOptions& options = {});

/// Routes to a single target; `stats` accumulates known-path counters.
TargetRoutes infer_target_routes(const AsGraph& graph, std::span<const AsPath> known, const Prefix& target,
                                 InferenceStats* stats = nullptr);

inline constexpr std::size_t kOracleMaxNodes = 16;

/// Exhaustive reference for infer_routes without known paths. Enumerates every
/// loop-free valley-free path to the origins and keeps, per AS, the most
/// preferred path whose remainder is exactly the route the next hop itself
/// selected. Throws GraphTooLarge above kOracleMaxNodes.
std::optional<InferredRoute> oracle_best_route(const AsGraph& graph, Asn source, const Prefix& target);

/// oracle_best_route for every source at once.
std::map<Asn, InferredRoute> oracle_routes(const AsGraph& graph, const Prefix& target);

/// Compares infer_routes (no known paths) with the oracle for every source.
/// Returns a description of the first disagreement, or nullopt.
std::optional<std::string> oracle_disagreement(const AsGraph& graph, const Prefix& target);

struct RouteCounts {
  Prefix target;
  /// counts[provenance][route class], indexed by the enum values.
  std::array<std::array<std::size_t, 3>, 2> counts{};
  std::size_t total = 0;

  std::size_t of(Provenance p, RouteClass c) const {
    return counts[static_cast<std::size_t>(p)][static_cast<std::size_t>(c)];
  }
};

std::vector<RouteCounts> route_count_summary(const RoutingTable& table);

/// `<target-prefix>|<source-asn>|<class>|<provenance>|<hop,hop,...>`
void write_routing_table(std::ostream& out, const RoutingTable& table);
RoutingTable read_routing_table(std::istream& in);

}  // namespace chokemap
