#include "chokemap/dnsmap.hpp"

#include "chokemap/error.hpp"

namespace chokemap {

std::vector<Prefix> ResolverTargetSet::prefixes() const {
  std::vector<Prefix> out;
  out.reserve(targets.size());
  for (const auto& t : targets) out.push_back(t.prefix);
  return out;
}

ResolverTargetSet select_resolver_targets(const ResolverInventory& inventory) {
  if (inventory.empty()) throw Error(ErrorKind::InvalidArgument, "resolver inventory is empty");
  ResolverTargetSet set;
  for (const auto& [asn, prefixes] : inventory) {
    const ResolverTarget* best = nullptr;
    ResolverTarget candidate;
    for (const auto& [prefix, count] : prefixes) {
      set.total_resolvers += count;
      // Prefixes iterate in ascending order, so strict > keeps the lowest on ties.
      if (!best || count > candidate.resolver_count) {
        candidate = {asn, prefix, count};
        best = &candidate;
      }
    }
    if (!best) continue;
    set.chosen_resolvers += candidate.resolver_count;
    set.targets.push_back(candidate);
  }
  return set;
}

CoverageReport dns_coverage(const AsGraph& graph, std::span<const AsPath> known, const ResolverTargetSet& targets,
                            const CoverageOptions& options, const InferenceOptions& inference) {
  auto prefixes = targets.prefixes();
  auto table = infer_routes(graph, known, prefixes, inference);
  return rank_interceptors(table, graph, options);
}

}  // namespace chokemap
