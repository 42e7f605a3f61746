#include "chokemap/intraas.hpp"

#include <algorithm>
#include <ostream>

#include "chokemap/error.hpp"
#include "chokemap/ingest.hpp"
#include "line_reader.hpp"
#include "text_util.hpp"

namespace chokemap {

void AliasMap::add_router(const std::string& router_id, const std::vector<std::string>& ips) {
  for (const auto& ip : ips) {
    auto [it, inserted] = ip_to_router_.emplace(ip, router_id);
    if (!inserted && it->second != router_id) {
      throw Error(ErrorKind::AliasConflict,
                  "IP " + ip + " assigned to routers " + it->second + " and " + router_id);
    }
  }
}

std::optional<std::string> AliasMap::router_of(const std::string& ip) const {
  auto it = ip_to_router_.find(ip);
  if (it == ip_to_router_.end()) return std::nullopt;
  return it->second;
}

std::map<std::string, std::set<std::string>> AliasMap::groups() const {
  std::map<std::string, std::set<std::string>> out;
  for (const auto& [ip, router] : ip_to_router_) out[router].insert(ip);
  return out;
}

std::vector<AsRouterPaths> build_router_topology(const std::vector<RouterTrace>& traces, const AliasMap& aliases) {
  std::map<Asn, std::vector<const RouterTrace*>> by_as;
  for (const auto& t : traces) by_as[t.as].push_back(&t);

  std::vector<AsRouterPaths> out;
  for (auto& [as, list] : by_as) {
    std::stable_sort(list.begin(), list.end(),
                     [](const RouterTrace* a, const RouterTrace* b) { return a->trace_id < b->trace_id; });
    AsRouterPaths entry{as, {}};
    for (const RouterTrace* t : list) {
      RouterPath path;
      for (std::size_t pos = 0; pos < t->hops.size(); ++pos) {
        const auto& hop = t->hops[pos];
        RouterId id;
        if (hop == "*") {
          id = "anon#" + t->trace_id + "#" + std::to_string(pos);
        } else {
          id = aliases.router_of(hop).value_or(hop);
        }
        if (path.empty() || path.back() != id) path.push_back(std::move(id));
      }
      if (!path.empty()) entry.paths.push_back(std::move(path));
    }
    out.push_back(std::move(entry));
  }
  return out;
}

EdgeCoreSplit classify_edge_core(const std::vector<RouterPath>& paths) {
  EdgeCoreSplit split;
  for (const auto& p : paths) {
    if (p.empty()) continue;
    split.edge.insert(p.front());
    split.edge.insert(p.back());
  }
  for (const auto& p : paths) {
    for (const auto& r : p) {
      if (!split.edge.contains(r)) split.core.insert(r);
    }
  }
  return split;
}

std::map<RouterId, std::size_t> router_path_counts(const std::vector<RouterPath>& paths) {
  std::map<RouterId, std::size_t> counts;
  for (const auto& p : paths) {
    std::set<RouterId> seen(p.begin(), p.end());
    for (const auto& r : seen) ++counts[r];
  }
  return counts;
}

std::vector<RouterId> heavy_hitters(const std::vector<RouterPath>& paths, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "router threshold must be in (0, 1]");
  }
  std::map<RouterId, std::vector<std::size_t>> incidence;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (const auto& r : paths[i]) {
      auto& list = incidence[r];
      if (list.empty() || list.back() != i) list.push_back(i);
    }
  }
  std::vector<std::pair<RouterId, std::size_t>> ranked;
  for (const auto& [r, list] : incidence) ranked.emplace_back(r, list.size());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  const double needed = threshold * static_cast<double>(paths.size()) - 1e-9;
  std::vector<bool> covered(paths.size(), false);
  std::size_t covered_count = 0;
  std::vector<RouterId> out;
  for (const auto& [r, count] : ranked) {
    if (static_cast<double>(covered_count) >= needed) break;
    out.push_back(r);
    for (std::size_t i : incidence[r]) {
      if (!covered[i]) {
        covered[i] = true;
        ++covered_count;
      }
    }
  }
  return out;
}

double path_coverage(const std::vector<RouterPath>& paths, const std::set<RouterId>& routers) {
  if (paths.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& p : paths) {
    if (std::any_of(p.begin(), p.end(), [&](const RouterId& r) { return routers.contains(r); })) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(paths.size());
}

std::string_view to_string(SelectionRule rule) {
  return rule == SelectionRule::EdgeSet ? "edge-set" : "heavy-hitter-set";
}

RuleDecision select_filter_routers(std::size_t edge_count, std::size_t heavy_hitter_count) {
  if (edge_count <= heavy_hitter_count) return {SelectionRule::EdgeSet, edge_count};
  return {SelectionRule::HeavyHitterSet, heavy_hitter_count};
}

RouterSelection select_filter_routers(Asn as, const EdgeCoreSplit& split, const std::vector<RouterId>& heavy,
                                      const std::vector<RouterPath>& paths) {
  RouterSelection sel;
  sel.as = as;
  sel.edge_count = split.edge.size();
  sel.core_count = split.core.size();
  sel.heavy_hitter_count = heavy.size();
  sel.path_count = paths.size();
  auto decision = select_filter_routers(sel.edge_count, sel.heavy_hitter_count);
  sel.rule = decision.rule;
  if (decision.rule == SelectionRule::EdgeSet) {
    sel.selected = split.edge;
  } else {
    sel.selected.insert(heavy.begin(), heavy.end());
  }
  sel.coverage_fraction = path_coverage(paths, sel.selected);
  return sel;
}

std::vector<RouterSelection> analyze_routers(const std::vector<AsRouterPaths>& topology, double threshold) {
  std::vector<RouterSelection> out;
  out.reserve(topology.size());
  for (const auto& entry : topology) {
    auto split = classify_edge_core(entry.paths);
    auto heavy = heavy_hitters(entry.paths, threshold);
    out.push_back(select_filter_routers(entry.as, split, heavy, entry.paths));
  }
  return out;
}

std::vector<RouterTrace> load_router_traces(std::istream& in, Diagnostics* diag) {
  std::vector<RouterTrace> out;
  text::for_each_line(in, [&](std::string_view line, std::size_t number) {
    auto parts = text::split(line, '|');
    if (parts.size() != 3) throw ParseError(0, "expected <asn>|<trace-id>|<hops>");
    RouterTrace trace;
    trace.as = parse_asn(parts[0]);
    trace.trace_id = std::string(text::trim(parts[1]));
    if (trace.trace_id.empty()) throw ParseError(0, "empty trace id");
    for (auto hop : text::split(parts[2], ',')) {
      hop = text::trim(hop);
      if (hop == "*") {
        trace.hops.emplace_back("*");
        continue;
      }
      if (looks_like_ipv6(hop)) {
        if (diag) diag->warn("line " + std::to_string(number) + ": IPv6 hop in trace skipped");
        return;
      }
      trace.hops.push_back(format_ipv4(parse_ipv4(hop)));
    }
    out.push_back(std::move(trace));
  });
  std::sort(out.begin(), out.end(), [](const RouterTrace& a, const RouterTrace& b) {
    return std::tie(a.as, a.trace_id, a.hops) < std::tie(b.as, b.trace_id, b.hops);
  });
  return out;
}

AliasMap load_aliases(std::istream& in, Diagnostics* diag) {
  AliasMap map;
  text::for_each_line(in, [&](std::string_view line, std::size_t number) {
    auto parts = text::split(line, '|');
    if (parts.size() != 2) throw ParseError(0, "expected <router-id>|<ip>,<ip>,...");
    std::string router(text::trim(parts[0]));
    if (router.empty()) throw ParseError(0, "empty router id");
    std::vector<std::string> ips;
    for (auto ip : text::split(parts[1], ',')) {
      ip = text::trim(ip);
      if (looks_like_ipv6(ip)) {
        if (diag) diag->warn("line " + std::to_string(number) + ": IPv6 alias skipped");
        continue;
      }
      ips.push_back(format_ipv4(parse_ipv4(ip)));
    }
    try {
      map.add_router(router, ips);
    } catch (const Error& e) {
      throw Error(e.kind(), "line " + std::to_string(number) + ": " + e.what());
    }
  });
  return map;
}

void write_router_traces(std::ostream& out, const std::vector<RouterTrace>& traces) {
  for (const auto& t : traces) {
    out << t.as.value() << '|' << t.trace_id << '|';
    for (std::size_t i = 0; i < t.hops.size(); ++i) out << (i ? "," : "") << t.hops[i];
    out << '\n';
  }
}

void write_aliases(std::ostream& out, const AliasMap& aliases) {
  for (const auto& [router, ips] : aliases.groups()) {
    out << router << '|';
    bool first = true;
    for (const auto& ip : ips) {
      out << (first ? "" : ",") << ip;
      first = false;
    }
    out << '\n';
  }
}

}  // namespace chokemap
