#include "chokemap/chokepoint.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <queue>

#include <fmt/format.h>

#include "chokemap/error.hpp"

namespace chokemap {

std::string_view to_string(CoverageMode mode) { return mode == CoverageMode::Rank ? "rank" : "greedy"; }

CoverageMode parse_coverage_mode(std::string_view text) {
  if (text == "rank") return CoverageMode::Rank;
  if (text == "greedy") return CoverageMode::Greedy;
  throw Error(ErrorKind::InvalidArgument, "coverage mode must be rank or greedy, got '" + std::string(text) + "'");
}

std::string CoverageScope::describe() const {
  auto join = [](const std::set<std::string>& s) {
    std::string out;
    for (const auto& c : s) out += (out.empty() ? "" : ",") + c;
    return out.empty() ? std::string("*") : out;
  };
  return "interceptors=" + join(interceptor_countries) + ";sources=" + join(source_countries);
}

std::vector<Asn> interceptors_of(const std::vector<Asn>& path, bool count_source) {
  std::vector<Asn> out;
  if (path.empty()) return out;
  if (count_source) out.push_back(path.front());
  for (std::size_t i = 1; i + 1 < path.size(); ++i) out.push_back(path[i]);
  return out;
}

namespace {

bool in(const std::set<std::string>& filter, const AsGraph& graph, Asn asn) {
  if (filter.empty()) return true;
  auto cc = graph.country(asn);
  return cc && filter.contains(std::string(*cc));
}

// Paths as lists of in-scope interceptor indices, plus the inverted index.
struct Incidence {
  std::size_t paths = 0;
  std::vector<std::size_t> offsets;  // per graph index, into members
  std::vector<std::uint32_t> members;

  std::span<const std::uint32_t> of(std::size_t node) const {
    return {members.data() + offsets[node], offsets[node + 1] - offsets[node]};
  }
};

Incidence build_incidence(const RoutingTable& table, const AsGraph& graph, const CoverageOptions& options) {
  const auto& scope = options.scope;
  std::vector<std::uint8_t> eligible(graph.size(), 0);
  for (std::size_t i = 0; i < graph.size(); ++i) eligible[i] = in(scope.interceptor_countries, graph, graph.asn(i));

  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;  // (node, path)
  Incidence inc;
  for (const auto& per_target : table.targets()) {
    for (const auto& route : per_target.routes) {
      if (!in(scope.source_countries, graph, route.source)) continue;
      const auto path_id = static_cast<std::uint32_t>(inc.paths++);
      for (Asn a : interceptors_of(route.path.hops, options.count_source)) {
        auto idx = graph.find(a);
        if (idx && eligible[*idx]) pairs.emplace_back(static_cast<std::uint32_t>(*idx), path_id);
      }
    }
  }
  inc.offsets.assign(graph.size() + 1, 0);
  for (auto [node, path] : pairs) ++inc.offsets[node + 1];
  std::partial_sum(inc.offsets.begin(), inc.offsets.end(), inc.offsets.begin());
  inc.members.resize(pairs.size());
  auto cursor = inc.offsets;
  for (auto [node, path] : pairs) inc.members[cursor[node]++] = path;
  return inc;
}

double ratio(std::size_t part, std::size_t whole) {
  return whole == 0 ? 0.0 : static_cast<double>(part) / static_cast<double>(whole);
}

}  // namespace

CoverageReport rank_interceptors(const RoutingTable& table, const AsGraph& graph, const CoverageOptions& options) {
  if (!options.scope.empty() && !graph.has_country_data()) {
    throw Error(ErrorKind::MissingCountryData, "country filter requested but no country tags are loaded");
  }
  const Incidence inc = build_incidence(table, graph, options);

  CoverageReport report;
  report.mode = options.mode;
  report.count_source = options.count_source;
  report.selection_scope = options.scope.describe();
  report.total_paths = inc.paths;

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    if (!inc.of(i).empty()) order.push_back(i);
  }
  // Graph indices follow ASN order, so a stable sort by count keeps ASN ties ascending.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return inc.of(a).size() > inc.of(b).size(); });
  for (std::size_t i : order) {
    report.ranked.push_back({graph.asn(i), inc.of(i).size(), ratio(inc.of(i).size(), inc.paths)});
  }

  std::vector<std::uint8_t> covered(inc.paths, 0);
  std::size_t covered_count = 0;
  auto take = [&](std::size_t node) {
    for (auto p : inc.of(node)) {
      if (!covered[p]) {
        covered[p] = 1;
        ++covered_count;
      }
    }
    std::size_t k = report.cumulative.size() + 1;
    report.cumulative.push_back({k, graph.asn(node), covered_count, ratio(covered_count, inc.paths)});
  };
  auto gain = [&](std::size_t node) {
    std::size_t g = 0;
    for (auto p : inc.of(node)) g += !covered[p];
    return g;
  };

  if (options.mode == CoverageMode::Rank) {
    for (std::size_t node : order) take(node);
  } else {
    // Lazy greedy: stale gains only overestimate, so a popped entry whose
    // gain is still current is the true maximum.
    using Entry = std::pair<std::size_t, std::size_t>;  // (gain, rank position)
    auto worse = [](const Entry& a, const Entry& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.second > b.second;
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> heap(worse);
    for (std::size_t pos = 0; pos < order.size(); ++pos) heap.push({inc.of(order[pos]).size(), pos});
    while (!heap.empty()) {
      auto [stale, pos] = heap.top();
      heap.pop();
      std::size_t fresh = gain(order[pos]);
      if (fresh == stale) {
        take(order[pos]);
      } else {
        heap.push({fresh, pos});
      }
    }
  }
  return report;
}

std::vector<Asn> select_key_ases(const CoverageReport& report, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, fmt::format("threshold must be in (0, 1], got {}", threshold));
  }
  const double needed = threshold * static_cast<double>(report.total_paths) - 1e-9;
  std::vector<Asn> out;
  for (const auto& point : report.cumulative) {
    out.push_back(point.added);
    if (static_cast<double>(point.covered) >= needed) return out;
  }
  double best = report.cumulative.empty() ? 0.0 : report.cumulative.back().fraction;
  throw Error(ErrorKind::Unreachable,
              fmt::format("threshold {} unreachable: all admitted ASes together cover {:.4f}", threshold, best));
}

CollateralReport collateral_damage(const RoutingTable& table, const std::set<Asn>& censors, const std::string& home,
                                   const AsGraph& graph, bool count_source) {
  CollateralReport report;
  report.home = home;
  report.censors = censors;
  for (const auto& per_target : table.targets()) {
    for (const auto& route : per_target.routes) {
      ++report.total_paths;
      auto hits = interceptors_of(route.path.hops, count_source);
      bool intercepted = std::any_of(hits.begin(), hits.end(), [&](Asn a) { return censors.contains(a); });
      if (!intercepted) continue;
      ++report.intercepted;
      auto cc = graph.country(route.source);
      if (!cc) {
        ++report.unknown_origin.count;
      } else if (*cc == home) {
        ++report.home_origin.count;
      } else {
        ++report.foreign_origin.count;
        ++report.per_country[std::string(*cc)];
      }
    }
  }
  for (auto* b : {&report.home_origin, &report.foreign_origin, &report.unknown_origin}) {
    b->fraction = ratio(b->count, report.total_paths);
  }
  return report;
}

void write_coverage_csv(std::ostream& out, const CoverageReport& report) {
  out << "k,as,covered,cumulative_fraction\n";
  out << "0,,0," << fmt::format("{:.4f}", 0.0) << '\n';
  for (const auto& p : report.cumulative) {
    out << fmt::format("{},{},{},{:.4f}\n", p.k, p.added.value(), p.covered, p.fraction);
  }
}

}  // namespace chokemap
