#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chokemap/pathinfer.hpp"

namespace chokemap {

struct FakeAdvertisement {
  Asn attacker;
  Prefix target;
  /// Path the attacker announces, starting at itself. Empty means the
  /// attacker claims to originate the prefix: [attacker].
  std::vector<Asn> claimed_path;

  std::vector<Asn> announced() const;
};

/// Which of the acceptance heuristics applied, keyed by the class of the
/// receiver's current route. 0 = the receiver had no route at all.
enum class AcceptRule : int { NoRoute = 0, CustomerRoute = 1, ProviderRoute = 2, PeerRoute = 3 };

struct AcceptDecision {
  bool accept = false;
  AcceptRule rule = AcceptRule::NoRoute;

  bool operator==(const AcceptDecision&) const = default;
};

/// Lengths are hop counts including the receiver. `current` is the class of
/// the route the receiver holds now (nullopt if none).
AcceptDecision accepts_fake(std::optional<RouteClass> current, std::size_t current_length, RouteClass fake,
                            std::size_t fake_length);

struct PoisonedRoute {
  AcceptRule rule = AcceptRule::NoRoute;
  RouteClass route_class = RouteClass::Provider;
  std::vector<Asn> path;  // receiver first, through the attacker

  bool operator==(const PoisonedRoute&) const = default;
};

struct CountryCounts {
  std::size_t home = 0;
  std::size_t foreign = 0;
  std::size_t unknown = 0;

  std::size_t total() const { return home + foreign + unknown; }
  bool operator==(const CountryCounts&) const = default;
};

struct HijackOutcome {
  Asn attacker;
  Prefix target;
  std::vector<Asn> claimed_path;
  /// Most preferred accepted fake per poisoned AS, with the rule its
  /// legitimate route put it under.
  std::map<Asn, PoisonedRoute> poisoned;
  CountryCounts counts;

  bool operator==(const HijackOutcome&) const = default;
};

struct HijackOptions {
  /// Only the attacker's direct neighbours decide; nothing is re-exported.
  bool neighbors_only = false;
  /// Country used to split poisoned ASes into home and foreign.
  std::string home;
};

/// Propagates the fake advertisement to a fixpoint. Receivers judge every
/// offer against their legitimate baseline route, so the result does not
/// depend on arrival order; every accepted fake is re-exported under the
/// usual export rules. Throws
/// UnknownAttacker, UnknownTarget (target not in the baseline) or
/// InvalidArgument (claimed path not starting at the attacker, or looping).
HijackOutcome simulate_hijack(const AsGraph& graph, const RoutingTable& baseline, const FakeAdvertisement& adv,
                              const HijackOptions& options = {});

/// Highest-degree ASes first, ties by ascending ASN. A non-empty
/// `countries` restricts candidates to ASes tagged with one of them.
std::vector<Asn> top_by_degree(const AsGraph& graph, std::size_t n, const std::set<std::string>& countries = {});

struct AttackerSummary {
  Asn attacker;
  std::size_t degree = 0;
  /// ASes poisoned for at least one target.
  std::set<Asn> affected;
  CountryCounts counts;
  /// Poisoned-set size per target, in target order.
  std::vector<std::size_t> per_target;

  bool operator==(const AttackerSummary&) const = default;
};

struct AttackerRankOptions {
  std::size_t top = 10;
  std::set<std::string> candidate_countries;
  HijackOptions hijack;
  unsigned jobs = 1;
};

/// Each candidate claims to originate every baseline target; simulations are
/// independent and share the baseline.
std::vector<AttackerSummary> rank_attackers(const AsGraph& graph, const RoutingTable& baseline,
                                            const AttackerRankOptions& options = {});

}  // namespace chokemap
