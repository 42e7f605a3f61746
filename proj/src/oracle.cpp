// Brute-force reference for route inference. Deliberately shares nothing with
// the staged propagation in pathinfer.cpp beyond the graph accessors.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chokemap/error.hpp"
#include "chokemap/pathinfer.hpp"

namespace chokemap {

namespace {

using Path = std::vector<Asn>;

struct Enumerator {
  const AsGraph& graph;
  const std::vector<Asn>& origins;
  std::vector<Path> out;
  Path current;

  bool is_origin(Asn a) const { return std::binary_search(origins.begin(), origins.end(), a); }

  // `descending` once a peer or downhill link has been used.
  void walk(Asn at, bool descending) {
    if (is_origin(at)) {
      out.push_back(current);
      return;
    }
    for (Asn next : graph.nodes()) {
      if (std::find(current.begin(), current.end(), next) != current.end()) continue;
      auto rel = graph.relation(graph.index_of(at), graph.index_of(next));
      if (!rel) continue;
      bool next_descending = descending;
      if (*rel == RouteClass::Provider) {
        if (descending) continue;
      } else if (*rel == RouteClass::Peer) {
        if (descending) continue;
        next_descending = true;
      } else {
        next_descending = true;
      }
      current.push_back(next);
      walk(next, next_descending);
      current.pop_back();
    }
  }
};

RouteClass class_of(const AsGraph& graph, const Path& p) {
  if (p.size() == 1) return RouteClass::Customer;
  return relationship_of(graph, p[0], p[1]);
}

// a preferred over b: class, then length, then next-hop ASN.
bool preferred(const AsGraph& graph, const Path& a, const Path& b) {
  auto ca = class_of(graph, a);
  auto cb = class_of(graph, b);
  if (ca != cb) return ca > cb;
  if (a.size() != b.size()) return a.size() < b.size();
  return a[1] < b[1];
}

}  // namespace

std::map<Asn, InferredRoute> oracle_routes(const AsGraph& graph, const Prefix& target) {
  if (graph.size() > kOracleMaxNodes) {
    throw Error(ErrorKind::GraphTooLarge, "oracle limited to " + std::to_string(kOracleMaxNodes) + " nodes, graph has " +
                                              std::to_string(graph.size()));
  }
  auto origin_span = graph.origins_of(target);
  if (origin_span.empty()) throw Error(ErrorKind::UnknownTarget, "target " + target.to_string() + " has no origin AS");
  std::vector<Asn> origins(origin_span.begin(), origin_span.end());

  // Every loop-free valley-free path from every AS to the first origin it hits.
  std::map<Asn, std::vector<Path>> candidates;
  for (Asn source : graph.nodes()) {
    Enumerator e{graph, origins, {}, {source}};
    e.walk(source, false);
    candidates[source] = std::move(e.out);
  }

  // An AS only forwards the route it selected itself, so a path is usable
  // only if its remainder equals the next hop's selection. Iterate selections
  // until nothing changes.
  std::map<Asn, std::optional<Path>> chosen;
  for (Asn a : graph.nodes()) chosen[a] = std::nullopt;
  for (Asn o : origins) chosen[o] = Path{o};

  const std::size_t max_rounds = graph.size() * graph.size() + 4;
  bool stable = false;
  for (std::size_t round = 0; round < max_rounds && !stable; ++round) {
    auto next = chosen;
    for (Asn source : graph.nodes()) {
      if (std::binary_search(origins.begin(), origins.end(), source)) continue;
      std::optional<Path> best;
      for (const Path& p : candidates[source]) {
        const auto& sel = chosen[p[1]];
        if (!sel || !std::equal(p.begin() + 1, p.end(), sel->begin(), sel->end())) continue;
        if (!best || preferred(graph, p, *best)) best = p;
      }
      next[source] = best;
    }
    stable = next == chosen;
    chosen = std::move(next);
  }
  if (!stable) throw Error(ErrorKind::InvalidArgument, "oracle route selection did not converge");

  std::map<Asn, InferredRoute> out;
  for (const auto& [asn, sel] : chosen) {
    if (!sel) continue;
    InferredRoute r;
    r.source = asn;
    r.target = target;
    r.path = AsPath{*sel, target};
    r.route_class = class_of(graph, *sel);
    r.provenance = Provenance::Inferred;
    out.emplace(asn, std::move(r));
  }
  return out;
}

std::optional<InferredRoute> oracle_best_route(const AsGraph& graph, Asn source, const Prefix& target) {
  if (graph.size() > kOracleMaxNodes) {
    throw Error(ErrorKind::GraphTooLarge, "oracle limited to " + std::to_string(kOracleMaxNodes) + " nodes");
  }
  auto all = oracle_routes(graph, target);
  auto it = all.find(source);
  if (it == all.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> oracle_disagreement(const AsGraph& graph, const Prefix& target) {
  auto expected = oracle_routes(graph, target);
  auto got = infer_target_routes(graph, {}, target);
  auto describe = [](const std::vector<Asn>& hops) {
    std::string s;
    for (Asn a : hops) s += (s.empty() ? "" : ",") + to_string(a);
    return s;
  };
  for (Asn source : graph.nodes()) {
    const InferredRoute* mine = got.find(source);
    auto it = expected.find(source);
    const std::string who = "AS" + to_string(source) + " to " + target.to_string() + ": ";
    if (!mine && it == expected.end()) continue;
    if (!mine) return who + "oracle reaches via " + describe(it->second.path.hops) + ", inference does not";
    if (it == expected.end()) return who + "inference reaches via " + describe(mine->path.hops) + ", oracle does not";
    if (mine->path.hops != it->second.path.hops || mine->route_class != it->second.route_class) {
      return who + "inferred " + describe(mine->path.hops) + " (" + std::string(to_string(mine->route_class)) +
             "), oracle " + describe(it->second.path.hops) + " (" + std::string(to_string(it->second.route_class)) +
             ")";
    }
  }
  return std::nullopt;
}

}  // namespace chokemap
