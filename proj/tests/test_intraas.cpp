#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "chokemap/error.hpp"
#include "chokemap/intraas.hpp"
#include "test_support.hpp"

using namespace chokemap;
using testing::as;

namespace {

RouterTrace trace(std::uint32_t asn, std::string id, std::vector<std::string> hops) {
  return {as(asn), std::move(id), std::move(hops)};
}

// Independent heavy-hitter recomputation: walk the ranking and count covered
// paths with plain set arithmetic.
std::size_t heavy_oracle(const std::vector<RouterPath>& paths, double threshold) {
  std::map<RouterId, std::set<std::size_t>> on;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (const auto& r : paths[i]) on[r].insert(i);
  }
  std::vector<std::pair<RouterId, std::size_t>> ranked;
  for (const auto& [r, s] : on) ranked.emplace_back(r, s.size());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::set<std::size_t> covered;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    covered.insert(on[ranked[k].first].begin(), on[ranked[k].first].end());
    if (covered.size() >= threshold * paths.size() - 1e-9) return k + 1;
  }
  return ranked.size();
}

std::vector<RouterPath> random_paths(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::vector<RouterPath> out;
  for (std::size_t i = 0; i < n; ++i) {
    RouterPath p;
    std::size_t len = 1 + rng() % 5;
    for (std::size_t j = 0; j < len; ++j) {
      // Skewed: low ids are much more common.
      auto id = (rng() % 30) * (rng() % 30) / 30;
      p.push_back("r" + std::to_string(id));
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace

TEST_CASE("aliases collapse to one router") {
  AliasMap aliases;
  aliases.add_router("R1", {"192.0.2.1", "192.0.2.2"});
  auto topo = build_router_topology({trace(7, "t1", {"192.0.2.1", "192.0.2.2"})}, aliases);
  REQUIRE(topo.size() == 1);
  CHECK(topo[0].as == as(7));
  CHECK(topo[0].paths == std::vector<RouterPath>{{"R1"}});
}

TEST_CASE("anonymous hops become per-position placeholders") {
  AliasMap aliases;
  aliases.add_router("R1", {"192.0.2.1"});
  aliases.add_router("R2", {"192.0.2.9"});
  auto topo = build_router_topology(
      {trace(7, "t1", {"192.0.2.1", "*", "192.0.2.9"}), trace(7, "t2", {"192.0.2.1", "*", "192.0.2.9"})}, aliases);
  REQUIRE(topo[0].paths.size() == 2);
  CHECK(topo[0].paths[0] == RouterPath{"R1", "anon#t1#1", "R2"});
  // Not merged across traces.
  CHECK(topo[0].paths[1][1] == "anon#t2#1");
  CHECK(topo[0].paths[0][1] != topo[0].paths[1][1]);
}

TEST_CASE("unaliased IPs keep their address as id") {
  auto topo = build_router_topology({trace(7, "t", {"192.0.2.1", "192.0.2.5"})}, AliasMap{});
  CHECK(topo[0].paths[0] == RouterPath{"192.0.2.1", "192.0.2.5"});
}

TEST_CASE("alias conflicts") {
  AliasMap aliases;
  aliases.add_router("R1", {"192.0.2.1"});
  CHECK(testing::error_kind_of([&] { aliases.add_router("R2", {"192.0.2.1"}); }) == ErrorKind::AliasConflict);
  std::istringstream in("R1|192.0.2.1\nR2|192.0.2.3,192.0.2.1\n");
  CHECK(testing::error_kind_of([&] { load_aliases(in); }) == ErrorKind::AliasConflict);
}

TEST_CASE("shared router path count") {
  std::vector<RouterPath> paths{{"R1", "R5"}, {"R5", "R2"}, {"R3", "R5", "R4"}};
  CHECK(router_path_counts(paths).at("R5") == 3);
}

TEST_CASE("edge and core classification") {
  auto s = classify_edge_core({{"R1", "R2", "R3"}});
  CHECK(s.edge == std::set<RouterId>{"R1", "R3"});
  CHECK(s.core == std::set<RouterId>{"R2"});
  auto single = classify_edge_core({{"R1"}});
  CHECK(single.edge == std::set<RouterId>{"R1"});
  CHECK(single.core.empty());
  // R2 is interior on the first path but last on the second.
  auto mixed = classify_edge_core({{"R1", "R2", "R3", "R4"}, {"R5", "R6", "R2"}});
  CHECK(mixed.edge == std::set<RouterId>{"R1", "R2", "R4", "R5"});
  CHECK(mixed.core == std::set<RouterId>{"R3", "R6"});
}

TEST_CASE("heavy hitters") {
  std::vector<RouterPath> hub{{"A", "H"}, {"H", "B"}, {"C", "H", "D"}};
  CHECK(heavy_hitters(hub) == std::vector<RouterId>{"H"});

  std::vector<RouterPath> disjoint;
  for (int i = 0; i < 10; ++i) disjoint.push_back({"R" + std::to_string(i)});
  CHECK(heavy_hitters(disjoint, 0.9).size() == 9);

  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto paths = random_paths(seed, 50);
    for (double th : {0.5, 0.9, 1.0}) CHECK(heavy_hitters(paths, th).size() == heavy_oracle(paths, th));
  }
  CHECK(testing::error_kind_of([&] { heavy_hitters(hub, 0.0); }) == ErrorKind::InvalidArgument);
  CHECK(testing::error_kind_of([&] { heavy_hitters(hub, 1.01); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("heavy hitters are monotone in the threshold") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto paths = random_paths(seed, 80);
    std::size_t prev = 0;
    for (double th = 0.05; th <= 1.0; th += 0.05) {
      auto h = heavy_hitters(paths, th);
      CHECK(h.size() >= prev);
      CHECK(path_coverage(paths, {h.begin(), h.end()}) >= th - 1e-9);
      prev = h.size();
    }
  }
}

TEST_CASE("Table 3 decision rows") {
  struct Row {
    std::uint32_t asn;
    std::size_t e, c, h, required;
  };
  const Row rows[] = {
      {9498, 1782, 5321, 5192, 1782}, {4755, 1779, 6229, 6434, 1779}, {55410, 133, 594, 634, 133},
      {9583, 484, 4458, 4275, 484},   {9730, 7, 63, 62, 7},           {55824, 66, 325, 254, 66},
      {45820, 193, 1147, 1132, 193},  {18101, 462, 2724, 2677, 462},  {10201, 90, 1396, 1315, 90},
  };
  std::size_t total = 0;
  for (const auto& r : rows) {
    auto d = select_filter_routers(r.e, r.h);
    CHECK_MESSAGE(d.required == r.required, "AS" << r.asn);
    CHECK(d.rule == SelectionRule::EdgeSet);
    total += d.required;
  }
  // The nine ASes need 4996 filtering routers in all.
  CHECK(total == 4996);
}

TEST_CASE("heavy-hitter set wins when it is smaller") {
  // Five edge routers, three core routers; c1 sits on 9 of 10 paths.
  std::vector<RouterPath> paths;
  const char* edges[] = {"e1", "e2", "e3", "e4", "e5"};
  for (int i = 0; i < 9; ++i) paths.push_back({edges[i % 5], "c1", edges[(i + 1) % 5]});
  paths.push_back({"e1", "c2", "c3", "e2"});
  auto split = classify_edge_core(paths);
  CHECK(split.edge.size() == 5);
  CHECK(split.core.size() == 3);
  auto heavy = heavy_hitters(paths, 0.9);
  CHECK(heavy == std::vector<RouterId>{"c1"});
  auto sel = select_filter_routers(as(1), split, heavy, paths);
  CHECK(sel.rule == SelectionRule::HeavyHitterSet);
  CHECK(sel.selected == std::set<RouterId>{"c1"});
  CHECK(sel.coverage_fraction >= 0.9);

  auto decision = select_filter_routers(5, 3);
  CHECK(decision.rule == SelectionRule::HeavyHitterSet);
  CHECK(decision.required == 3);
}

TEST_CASE("selection invariants on random topologies") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto paths = random_paths(seed, 60);
    auto split = classify_edge_core(paths);
    auto heavy = heavy_hitters(paths);
    auto sel = select_filter_routers(as(3), split, heavy, paths);
    CHECK(sel.selected.size() == std::min(split.edge.size(), heavy.size()));
    CHECK((sel.rule == SelectionRule::EdgeSet) == (split.edge.size() <= heavy.size()));
    if (sel.rule == SelectionRule::EdgeSet) {
      CHECK(sel.coverage_fraction == 1.0);
    } else {
      CHECK(sel.coverage_fraction >= 0.9 - 1e-9);
    }
    for (const auto& r : split.edge) CHECK_FALSE(split.core.contains(r));
  }
}

TEST_CASE("alias collapsing never lengthens a path") {
  std::mt19937_64 rng(3);
  AliasMap aliases;
  for (int r = 0; r < 10; ++r) {
    std::vector<std::string> ips;
    for (int k = 0; k < 3; ++k) ips.push_back(format_ipv4(0xC0000200u + r * 3 + k));
    aliases.add_router("R" + std::to_string(r), ips);
  }
  std::vector<RouterTrace> traces;
  for (int t = 0; t < 50; ++t) {
    std::vector<std::string> hops;
    std::size_t len = 1 + rng() % 8;
    for (std::size_t j = 0; j < len; ++j) {
      hops.push_back(rng() % 10 == 0 ? "*" : format_ipv4(0xC0000200u + rng() % 30));
    }
    traces.push_back(trace(9, "t" + std::to_string(100 + t), hops));
  }
  auto topo = build_router_topology(traces, aliases);
  REQUIRE(topo.size() == 1);
  std::map<std::string, std::size_t> raw;
  for (const auto& t : traces) raw[t.trace_id] = t.hops.size();
  std::size_t i = 0;
  for (const auto& [id, len] : raw) CHECK(topo[0].paths[i++].size() <= len);
}

TEST_CASE("trace and alias files round trip") {
  std::vector<RouterTrace> traces{trace(7, "a", {"192.0.2.1", "*"}), trace(9, "b", {"192.0.2.7"})};
  AliasMap aliases;
  aliases.add_router("R1", {"192.0.2.1", "192.0.2.3"});
  std::stringstream t, a;
  write_router_traces(t, traces);
  write_aliases(a, aliases);
  CHECK(load_router_traces(t) == traces);
  CHECK(load_aliases(a) == aliases);

  std::istringstream bad("7|x|192.0.2.1\n7|y|\n");
  try {
    load_router_traces(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("analyze_routers covers every AS") {
  std::vector<RouterTrace> traces{trace(7, "a", {"192.0.2.1", "192.0.2.2"}), trace(9, "b", {"192.0.2.7"})};
  auto result = analyze_routers(build_router_topology(traces, AliasMap{}));
  REQUIRE(result.size() == 2);
  CHECK(result[0].as == as(7));
  CHECK(result[1].as == as(9));
  CHECK(result[1].selected.size() == 1);
}
