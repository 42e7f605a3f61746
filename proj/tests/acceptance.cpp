// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "chokemap/chokepoint.hpp"
#include "chokemap/cli.hpp"
#include "chokemap/dnsmap.hpp"
#include "chokemap/hijack.hpp"
#include "chokemap/ingest.hpp"
#include "chokemap/intraas.hpp"
#include "chokemap/pathinfer.hpp"
#include "chokemap/probe.hpp"
#include "chokemap/synth.hpp"
#include "probe_stub.hpp"
#include "test_support.hpp"

using namespace chokemap;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
  std::vector<std::string> problems;

  void fail(std::string why) {
    pass = false;
    if (problems.size() < 5) problems.push_back(std::move(why));
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// Interceptors recomputed here rather than borrowed from the library.
std::vector<Asn> interceptors(const std::vector<Asn>& path) {
  std::vector<Asn> out{path.front()};
  for (std::size_t i = 1; i + 1 < path.size(); ++i) out.push_back(path[i]);
  return out;
}

synth::SynthSpec spec_200(std::uint64_t seed) {
  synth::SynthSpec spec;
  spec.seed = seed;
  spec.n_transit = 5;
  spec.n_regional = 25;
  spec.n_stub = 170;
  spec.peer_density = 0.2;
  spec.n_targets = 12;
  return spec;
}

// 1 -------------------------------------------------------------------------
Verdict oracle_equivalence() {
  Verdict v;
  const auto start = Clock::now();
  const Prefix target = Prefix::parse("10.0.0.0/24");
  const std::size_t trials = 200;
  std::size_t compared = 0, disagreements = 0;
  for (std::uint64_t seed = 1; seed <= trials; ++seed) {
    auto g = testing::random_graph(seed, 12);
    auto table = infer_routes(g, {}, std::vector<Prefix>{target});
    const auto* routes = table.find(target);
    for (Asn source : g.nodes()) {
      ++compared;
      auto expected = oracle_best_route(g, source, target);
      const InferredRoute* got = routes ? routes->find(source) : nullptr;
      bool same = (expected.has_value() == (got != nullptr));
      if (same && got) {
        same = got->route_class == expected->route_class && got->path.hops.size() == expected->path.hops.size() &&
               got->path.hops == expected->path.hops;
      }
      if (!same) {
        ++disagreements;
        v.fail(fmt::format("seed {} AS{}", seed, source.value()));
      }
    }
  }
  const double secs = seconds_since(start);
  if (secs >= 60.0) v.fail(fmt::format("took {:.1f} s", secs));
  v.detail = fmt::format("{} graphs, {} (source,target) pairs, {} disagreements, {:.2f} s", trials, compared,
                         disagreements, secs);
  return v;
}

// 2 -------------------------------------------------------------------------
Verdict valley_free_soundness() {
  Verdict v;
  auto bundle = synth::generate(spec_200(1));
  const auto& g = bundle.graph;
  std::size_t checked = 0;
  auto check = [&](const std::vector<Asn>& hops, const std::string& who) {
    ++checked;
    bool ok = false;
    try {
      ok = valley_free(hops, g) && loop_free(hops);
    } catch (const Error& e) {
      v.fail(who + ": " + e.what());
      return;
    }
    if (!ok) v.fail(who + " path is not valley-free and loop-free");
  };

  auto table = infer_routes(g, bundle.known_paths, bundle.target_prefixes);
  for (const auto& t : table.targets()) {
    for (const auto& r : t.routes) check(r.path.hops, "pathinfer");
  }

  auto report = rank_interceptors(table, g);
  std::set<Asn> on_some_path;
  for (const auto& t : table.targets()) {
    for (const auto& r : t.routes) {
      check(r.path.hops, "chokepoint");
      for (Asn a : interceptors_of(r.path.hops, true)) on_some_path.insert(a);
    }
  }
  for (const auto& ranked : report.ranked) {
    if (!on_some_path.contains(ranked.asn)) v.fail(fmt::format("chokepoint ranked AS{} on no path", ranked.asn.value()));
  }

  std::size_t poisoned = 0;
  for (Asn attacker : top_by_degree(g, 5)) {
    for (const auto& target : bundle.target_prefixes) {
      auto out = simulate_hijack(g, table, {attacker, target, {}});
      for (const auto& [asn, route] : out.poisoned) {
        check(route.path, fmt::format("hijack AS{} via AS{}", asn.value(), attacker.value()));
        ++poisoned;
      }
    }
  }
  v.detail = fmt::format("{} ASes, {} paths checked ({} hijack routes), {} violations", g.size(), checked, poisoned,
                         v.problems.size());
  return v;
}

// 3 -------------------------------------------------------------------------
Verdict table3_rule() {
  Verdict v;
  struct Row {
    std::uint32_t asn;
    std::size_t e, c, h;
  };
  // Edge, core and heavy-hitter router counts of the nine ASes.
  const Row rows[] = {
      {9498, 1782, 5321, 5192}, {4755, 1779, 6229, 6434}, {55410, 133, 594, 634},
      {9583, 484, 4458, 4275},  {9730, 7, 63, 62},        {55824, 66, 325, 254},
      {45820, 193, 1147, 1132}, {18101, 462, 2724, 2677}, {10201, 90, 1396, 1315},
  };
  const std::map<std::uint32_t, std::size_t> spot{{9498, 1782}, {4755, 1779}, {9730, 7}};
  std::size_t matched = 0;
  for (const auto& r : rows) {
    auto d = select_filter_routers(r.e, r.h);
    bool ok = d.required == std::min(r.e, r.h);
    if (auto it = spot.find(r.asn); it != spot.end()) ok = ok && d.required == it->second;
    if (ok) {
      ++matched;
    } else {
      v.fail(fmt::format("AS{} got {}", r.asn, d.required));
    }
  }
  v.detail = fmt::format("{}/9 rows match min(E, H)", matched);
  return v;
}

// 4 -------------------------------------------------------------------------
Verdict figure1_hijack() {
  Verdict v;
  // A=1 < B=2 < C=3 < D=4 < E=5 < Pr=6 (each the provider of the previous),
  // F1=7 customer of Pr, Att=66 provider of B, H=8 provider of Att reaching
  // Pr through X=9. Att announces [Att, F1, Pr].
  auto g = testing::graph_of({"2>1", "3>2", "4>3", "5>4", "6>5", "6>7", "66>2", "8>66", "8>9", "9>6"}, {6});
  auto base = infer_routes(g, {}, std::vector<Prefix>{testing::kTarget});
  auto out = simulate_hijack(g, base, {Asn(66), testing::kTarget, testing::hops({66, 7, 6})});
  std::set<Asn> got;
  for (const auto& [a, _] : out.poisoned) got.insert(a);
  // Hand-derived: B prefers the 4-hop fake over its 5-hop provider route and
  // passes it only to its customer A.
  const std::set<Asn> expected{Asn(1), Asn(2)};
  if (got != expected) {
    std::string s;
    for (Asn a : got) s += " " + to_string(a);
    v.fail("poisoned set was {" + s + " }");
  }
  if (got.contains(Asn(6))) v.fail("true origin poisoned");
  for (std::uint32_t clean : {3u, 5u, 7u, 8u, 9u}) {
    if (got.contains(Asn(clean))) v.fail(fmt::format("AS{} should stay clean", clean));
  }
  if (out.poisoned.contains(Asn(2)) && out.poisoned.at(Asn(2)).path != testing::hops({2, 66, 7, 6})) {
    v.fail("B's fake path differs");
  }
  v.detail = fmt::format("poisoned {} ASes, expected {{1, 2}}", got.size());
  return v;
}

// 5 -------------------------------------------------------------------------
Verdict ballani_rules() {
  Verdict v;
  // Hand oracle, one branch per rule. Lengths compare against a current
  // route of 4 hops.
  auto hand = [](char current, char fake, std::size_t len) {
    const bool shorter = len < 4;
    switch (current) {
      case 'C': return fake == 'C' && shorter;                   // rule 1
      case 'R': return fake == 'R' ? shorter : true;             // rule 2
      case 'P': return fake == 'C' || (fake == 'P' && shorter);  // rule 3
      default: return true;
    }
  };
  auto cls = [](char c) {
    return c == 'C' ? RouteClass::Customer : c == 'P' ? RouteClass::Peer : RouteClass::Provider;
  };
  std::size_t cases = 0, matched = 0;
  for (char current : {'C', 'R', 'P'}) {
    for (char fake : {'C', 'P', 'R'}) {
      for (std::size_t len : {3u, 4u, 5u}) {
        ++cases;
        auto d = accepts_fake(cls(current), 4, cls(fake), len);
        const int rule = current == 'C' ? 1 : current == 'R' ? 2 : 3;
        if (d.accept == hand(current, fake, len) && static_cast<int>(d.rule) == rule) {
          ++matched;
        } else {
          v.fail(fmt::format("current {} fake {} len {}", current, fake, len));
        }
      }
    }
  }
  v.detail = fmt::format("{}/{} decisions match", matched, cases);
  return v;
}

// 6 -------------------------------------------------------------------------
Verdict coverage_properties() {
  Verdict v;
  std::size_t greedy_behind = 0, points = 0;
  std::vector<std::string> notes;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto bundle = synth::generate(spec_200(seed));
    auto table = infer_routes(bundle.graph, bundle.known_paths, bundle.target_prefixes);
    CoverageOptions opt;
    auto rank = rank_interceptors(table, bundle.graph, opt);
    opt.mode = CoverageMode::Greedy;
    auto greedy = rank_interceptors(table, bundle.graph, opt);

    for (const auto* r : {&rank, &greedy}) {
      for (std::size_t k = 1; k < r->cumulative.size(); ++k) {
        if (r->cumulative[k].covered < r->cumulative[k - 1].covered) {
          v.fail(fmt::format("seed {} {} curve drops at k={}", seed, to_string(r->mode), k + 1));
        }
      }
      if (r->cumulative.empty() || r->cumulative.back().fraction != 1.0) {
        v.fail(fmt::format("seed {} {} curve ends below 1.0", seed, to_string(r->mode)));
      }
    }
    for (std::size_t k = 0; k < std::min(rank.cumulative.size(), greedy.cumulative.size()); ++k) {
      ++points;
      if (greedy.cumulative[k].covered < rank.cumulative[k].covered) {
        ++greedy_behind;
        v.fail(fmt::format("seed {} k={}: greedy {} < rank {}", seed, k + 1, greedy.cumulative[k].covered,
                           rank.cumulative[k].covered));
      }
    }

    // Direct scan for the minimal rank prefix reaching 95%.
    std::vector<std::vector<Asn>> paths;
    for (const auto& t : table.targets()) {
      for (const auto& r : t.routes) paths.push_back(interceptors(r.path.hops));
    }
    std::set<Asn> chosen;
    std::size_t minimal = 0;
    for (std::size_t k = 1; k <= rank.ranked.size(); ++k) {
      chosen.insert(rank.ranked[k - 1].asn);
      std::size_t hit = 0;
      for (const auto& p : paths) hit += std::any_of(p.begin(), p.end(), [&](Asn a) { return chosen.contains(a); });
      if (static_cast<double>(hit) >= 0.95 * static_cast<double>(paths.size())) {
        minimal = k;
        break;
      }
    }
    auto keys = select_key_ases(rank, 0.95);
    std::vector<Asn> prefix;
    for (std::size_t i = 0; i < minimal; ++i) prefix.push_back(rank.ranked[i].asn);
    if (keys != prefix) v.fail(fmt::format("seed {}: select_key_ases gave {} ASes, scan {}", seed, keys.size(), minimal));
    notes.push_back(fmt::format("k95={}", minimal));
  }
  v.detail = fmt::format("5 seeds; greedy behind rank at {}/{} points; {}", greedy_behind, points,
                         fmt::to_string(fmt::join(notes, " ")));
  return v;
}

// 7 -------------------------------------------------------------------------
Verdict collateral_accounting() {
  Verdict v;
  std::size_t total_foreign = 0, bundles = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    synth::SynthSpec spec;
    spec.seed = seed;
    spec.n_transit = 2;
    spec.n_regional = 3;
    spec.n_stub = 10;
    spec.peer_density = 0.2;
    spec.country_mix = {{"IN", 0.5}, {"PK", 0.4}};
    spec.n_targets = 3;
    auto bundle = synth::generate(spec);
    const auto& g = bundle.graph;
    ++bundles;

    // Censors: the two highest-degree home ASes.
    auto censor_list = top_by_degree(g, 2, {"IN"});
    std::set<Asn> censors(censor_list.begin(), censor_list.end());

    auto table = infer_routes(g, bundle.known_paths, bundle.target_prefixes);
    auto report = collateral_damage(table, censors, "IN", g);

    std::size_t home = 0, foreign = 0, unknown = 0;
    for (const auto& target : bundle.target_prefixes) {
      for (const auto& [src, route] : oracle_routes(g, target)) {
        auto who = interceptors(route.path.hops);
        if (std::none_of(who.begin(), who.end(), [&](Asn a) { return censors.contains(a); })) continue;
        auto cc = g.country(src);
        if (!cc) {
          ++unknown;
        } else if (*cc == "IN") {
          ++home;
        } else {
          ++foreign;
        }
      }
    }
    const auto sum = report.home_origin.count + report.foreign_origin.count + report.unknown_origin.count;
    if (sum != report.intercepted) v.fail(fmt::format("seed {}: buckets sum to {} of {}", seed, sum, report.intercepted));
    if (report.foreign_origin.count != foreign) {
      v.fail(fmt::format("seed {}: foreign {} vs oracle {}", seed, report.foreign_origin.count, foreign));
    }
    if (report.home_origin.count != home || report.unknown_origin.count != unknown) {
      v.fail(fmt::format("seed {}: home/unknown differ from oracle", seed));
    }
    total_foreign += foreign;
  }
  v.detail = fmt::format("{} two-country bundles, {} foreign intercepted paths matched", bundles, total_foreign);
  return v;
}

// 8 -------------------------------------------------------------------------
Verdict probe_classification() {
  Verdict v;
  testing::StubSite site;
  auto refused = [] { return "http://127.0.0.1:" + std::to_string(testing::refused_port()) + "/"; };
  struct Case {
    std::string category;
    std::string url;
    UrlStatus expected;
  };
  std::vector<Case> cases;
  auto add = [&](const std::string& cat, const std::string& url, UrlStatus s) { cases.push_back({cat, url, s}); };
  for (int i = 1; i <= 4; ++i) add("block-page", site.url("/blocked?v=" + std::to_string(i)), UrlStatus::Censored);
  for (int i = 1; i <= 2; ++i) add("block-page", site.url("/header-block?v=" + std::to_string(i)), UrlStatus::Censored);
  add("block-page", site.url("/blocked-404"), UrlStatus::Censored);
  for (int n : {0, 1, 3}) add("block-page", site.url("/hop/" + std::to_string(n) + "/blocked"), UrlStatus::Censored);
  for (int i = 1; i <= 4; ++i) add("clean", site.url("/clean?v=" + std::to_string(i)), UrlStatus::Open);
  for (int n : {0, 2, 4}) add("clean", site.url("/hop/" + std::to_string(n) + "/clean"), UrlStatus::Open);
  add("clean", site.url("/dead-end"), UrlStatus::Open);
  add("clean", site.url("/loop"), UrlStatus::Open);
  add("clean", site.url("/hop/7/clean"), UrlStatus::Open);
  for (int i = 0; i < 3; ++i) add("unreachable", refused(), UrlStatus::Inaccessible);
  for (int i = 0; i < 2; ++i) add("unreachable", site.url("/slow?v=" + std::to_string(i)), UrlStatus::Inaccessible);
  add("unreachable", site.url("/down"), UrlStatus::Inaccessible);
  add("unreachable", site.url("/down?again"), UrlStatus::Inaccessible);
  add("unreachable", site.url("/missing"), UrlStatus::Inaccessible);
  add("unreachable", "https://127.0.0.1:" + std::to_string(site.port()) + "/clean", UrlStatus::Inaccessible);
  add("unreachable", "http://no-such-host.invalid/", UrlStatus::Inaccessible);

  UrlCorpus corpus;
  for (const auto& c : cases) {
    corpus.entries.push_back({c.category, c.url});
    ++corpus.categories[c.category];
  }
  corpus.categories["empty"] = 0;
  ProbeConfig cfg;
  cfg.timeout = std::chrono::milliseconds(300);
  cfg.rate_per_sec = 0;
  auto summary = probe_corpus(corpus, default_signatures(), cfg);

  std::size_t correct = 0;
  if (summary.results.size() != cases.size()) v.fail("some URLs were not probed");
  for (std::size_t i = 0; i < std::min(cases.size(), summary.results.size()); ++i) {
    if (summary.results[i].status == cases[i].expected) {
      ++correct;
    } else {
      v.fail(fmt::format("{} -> {} ({})", cases[i].url, to_string(summary.results[i].status), summary.results[i].reason));
    }
  }
  for (const auto& [cat, n] : corpus.categories) {
    if (summary.per_category.at(cat).total() != n) v.fail("tally of " + cat + " does not sum to its size");
  }
  if (summary.per_category.at("block-page") != CategoryTally{10, 0, 0} ||
      summary.per_category.at("clean") != CategoryTally{0, 10, 0} ||
      summary.per_category.at("unreachable") != CategoryTally{0, 0, 10}) {
    v.fail("category tallies differ from the script");
  }
  v.detail = fmt::format("{}/{} scripted cases classified correctly", correct, cases.size());
  return v;
}

// 9 -------------------------------------------------------------------------
Verdict dns_target_selection() {
  Verdict v;
  // AS i owns 30.i.k.0/24 for k < 3 + i % 3. The maximum sits at k = i % 3;
  // every even AS also has a tie at a higher k, every fourth a tie at k = 0
  // (which then wins as the lowest prefix).
  ResolverInventory inventory;
  std::map<Asn, Prefix> expected;
  std::size_t ties = 0;
  for (std::uint32_t i = 1; i <= 50; ++i) {
    auto p = [&](std::uint32_t k) { return Prefix((30u << 24) | (i << 16) | (k << 8), 24); };
    const std::uint32_t n = 3 + i % 3, top = i % 3;
    auto& prefixes = inventory[Asn(i)];
    for (std::uint32_t k = 0; k < n; ++k) prefixes[p(k)] = 1 + (k * 7 + i) % 9;
    const std::uint64_t best = 100 + i;
    prefixes[p(top)] = best;
    Prefix winner = p(top);
    if (i % 2 == 0) {
      prefixes[p(n - 1 == top ? top : n - 1)] = best;
      ties += n - 1 != top;
    }
    if (i % 4 == 0 && top != 0) {
      prefixes[p(0)] = best;
      winner = p(0);
      ++ties;
    }
    expected[Asn(i)] = winner;
  }
  auto set = select_resolver_targets(inventory);
  if (set.targets.size() != 50) v.fail(fmt::format("{} targets", set.targets.size()));
  std::size_t right = 0;
  for (const auto& t : set.targets) {
    if (expected.at(t.as) == t.prefix) {
      ++right;
    } else {
      v.fail(fmt::format("AS{} chose {}", t.as.value(), t.prefix.to_string()));
    }
  }
  // Shuffle the inventory lines, reload, reselect; also reselect the result.
  std::vector<std::string> lines;
  for (const auto& [asn, prefixes] : inventory) {
    for (const auto& [p, n] : prefixes) lines.push_back(fmt::format("{}|{}|{}", p.to_string(), asn.value(), n));
  }
  std::mt19937_64 rng(2024);
  for (int round = 0; round < 10; ++round) {
    std::shuffle(lines.begin(), lines.end(), rng);
    std::stringstream text;
    for (const auto& l : lines) text << l << '\n';
    if (!(select_resolver_targets(load_resolver_inventory(text)) == set)) v.fail("shuffled input changed the result");
  }
  ResolverInventory again;
  for (const auto& t : set.targets) again[t.as][t.prefix] = t.resolver_count;
  if (select_resolver_targets(again).targets != set.targets) v.fail("not idempotent");
  v.detail = fmt::format("{}/50 ASes correct, {} crafted ties, 10 shuffles", right, ties);
  return v;
}

// 10 ------------------------------------------------------------------------
Verdict determinism_and_scale() {
  Verdict v;
  testing::TempDir tmp("acceptance-scale");
  synth::SynthSpec spec;
  spec.seed = 10;
  spec.n_transit = 20;
  spec.n_regional = 980;
  spec.n_stub = 9000;
  spec.peer_density = 0.1;
  spec.n_targets = 200;
  spec.country_mix = {{"IN", 0.7}, {"PK", 0.2}};
  const auto gen_start = Clock::now();
  auto data = tmp.path() / "bundle";
  write_bundle(data, synth::generate(spec));
  const double gen_secs = seconds_since(gen_start);

  const auto jobs = std::to_string(std::max(1u, std::thread::hardware_concurrency()));
  std::vector<double> times;
  for (const char* run : {"a", "b"}) {
    const auto out = (tmp.path() / run).string();
    const auto start = Clock::now();
    for (std::vector<std::string> cmd : {std::vector<std::string>{"infer"}, {"rank-as"}, {"hijack", "rank"}}) {
      cmd.insert(cmd.end(), {"--data", data.string(), "--out", out, "--jobs", jobs});
      std::ostringstream o, e;
      if (cli::run(cmd, o, e) != 0) v.fail(cmd.front() + " failed: " + e.str());
    }
    times.push_back(seconds_since(start));
  }
  for (double t : times) {
    if (t >= 120.0) v.fail(fmt::format("pipeline took {:.1f} s", t));
  }
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(tmp.path() / "a")) {
    if (!entry.is_regular_file()) continue;
    ++files;
    auto rel = fs::relative(entry.path(), tmp.path() / "a");
    auto slurp = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    if (!fs::exists(tmp.path() / "b" / rel) || slurp(entry.path()) != slurp(tmp.path() / "b" / rel)) {
      v.fail(rel.string() + " differs between runs");
    }
  }
  if (files < 7) v.fail(fmt::format("only {} report files", files));
  v.detail = fmt::format("10000 ASes, 200 targets, jobs={}: runs {:.1f} s and {:.1f} s (generation {:.1f} s), {} files "
                         "identical",
                         jobs, times[0], times[1], gen_secs, files);
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"oracle equivalence", oracle_equivalence},
      {"valley-free soundness", valley_free_soundness},
      {"filter-router rule on the nine AS rows", table3_rule},
      {"figure 1 hijack scenario", figure1_hijack},
      {"acceptance-rule unit suite", ballani_rules},
      {"coverage properties on synth bundles", coverage_properties},
      {"collateral accounting", collateral_accounting},
      {"probe classification", probe_classification},
      {"DNS target selection", dns_target_selection},
      {"determinism and scale", determinism_and_scale},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.fail(std::string("threw: ") + e.what());
    }
    std::cout << fmt::format("criterion {:2}: {} - {}: {}\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first,
                             v.detail);
    for (const auto& p : v.problems) std::cout << "              " << p << '\n';
    std::cout.flush();
    failed += !v.pass;
  }
  std::cout << fmt::format("{}/{} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
