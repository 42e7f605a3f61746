#include "chokemap/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include "chokemap/error.hpp"
#include "chokemap/pathinfer.hpp"
#include "line_reader.hpp"
#include "text_util.hpp"

namespace chokemap::synth {

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorKind::InvalidArgument, "Rng::below needs a positive bound");
  // Reject the top partial bucket so every residue is equally likely.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = next();
  } while (x >= limit);
  return x % bound;
}

double Rng::unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

namespace {

void infeasible(const std::string& msg) { throw Error(ErrorKind::InfeasibleSpec, msg); }

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

struct Tiers {
  std::vector<Asn> transit, regional, stub;
};

Tiers assign_asns(const SynthSpec& spec) {
  Tiers t;
  std::uint64_t next = 1;
  for (std::size_t i = 0; i < spec.n_transit; ++i) t.transit.emplace_back(next++);
  for (std::size_t i = 0; i < spec.n_regional; ++i) t.regional.emplace_back(next++);
  for (std::size_t i = 0; i < spec.n_stub; ++i) t.stub.emplace_back(next++);
  return t;
}

Asn pick(Rng& rng, const std::vector<Asn>& from) { return from[rng.below(from.size())]; }

// One or two distinct providers from `pool`.
void attach(Rng& rng, AsGraphBuilder& b, Asn customer, const std::vector<Asn>& pool) {
  Asn first = pick(rng, pool);
  b.add_provider_customer(first, customer);
  if (pool.size() > 1 && rng.chance(0.5)) {
    Asn second = pick(rng, pool);
    if (second != first) b.add_provider_customer(second, customer);
  }
}

// With probability `density`, link each AS to a random unrelated AS of the
// same tier.
void add_tier_peers(Rng& rng, std::vector<AsEdge>& edges, const std::vector<Asn>& tier, double density,
                    std::set<std::pair<Asn, Asn>>& related) {
  if (tier.size() < 2) return;
  for (Asn a : tier) {
    if (!rng.chance(density)) continue;
    Asn b = pick(rng, tier);
    auto key = std::minmax(a, b);
    if (a == b || related.contains({key.first, key.second})) continue;
    related.insert({key.first, key.second});
    edges.push_back({key.first, key.second, Relationship::Peer});
  }
}

Prefix nth_prefix(std::uint32_t base, std::size_t n) {
  return Prefix(base + static_cast<std::uint32_t>(n) * 256u, 24);
}

constexpr std::uint32_t kTargetBase = 10u << 24;          // 10.0.0.0
constexpr std::uint32_t kResolverBase = 100u << 24;       // 100.0.0.0
constexpr std::uint32_t kRouterBase = (198u << 24) | (18u << 16);  // 198.18.0.0

void add_router_traces(Rng& rng, const SynthSpec& spec, const std::vector<Asn>& transits, DatasetParts& parts) {
  std::uint32_t next_ip = kRouterBase + 1;
  for (Asn as : transits) {
    const std::size_t n_routers = 4 + rng.below(9);
    const std::size_t n_edge = 2 + rng.below(n_routers / 2);
    std::vector<std::vector<std::string>> ips(n_routers);
    for (std::size_t r = 0; r < n_routers; ++r) {
      std::size_t n_ips = 1 + rng.below(3);
      for (std::size_t k = 0; k < n_ips; ++k) ips[r].push_back(format_ipv4(next_ip++));
      if (n_ips > 1) parts.aliases.add_router("as" + to_string(as) + "-r" + std::to_string(r), ips[r]);
    }
    auto hop = [&](std::size_t router) {
      if (rng.chance(0.05)) return std::string("*");
      return ips[router][rng.below(ips[router].size())];
    };
    for (std::size_t j = 0; j < spec.traces_per_transit; ++j) {
      RouterTrace trace{as, "t" + to_string(as) + "-" + std::to_string(j), {}};
      trace.hops.push_back(hop(rng.below(n_edge)));
      if (n_routers > n_edge) {
        std::size_t n_core = 1 + rng.below(3);
        for (std::size_t c = 0; c < n_core; ++c) trace.hops.push_back(hop(n_edge + rng.below(n_routers - n_edge)));
      }
      trace.hops.push_back(hop(rng.below(n_edge)));
      parts.router_traces.push_back(std::move(trace));
    }
  }
}

}  // namespace

void validate(const SynthSpec& spec) {
  if (!in_unit(spec.peer_density)) infeasible("peer_density must be in [0,1]");
  if (!in_unit(spec.known_path_fraction)) infeasible("known_path_fraction must be in [0,1]");
  if (!in_unit(spec.resolver_fraction)) infeasible("resolver_fraction must be in [0,1]");
  double mix = 0.0;
  for (const auto& [cc, f] : spec.country_mix) {
    if (!is_country_code(cc)) infeasible("bad country code '" + cc + "'");
    if (!in_unit(f)) infeasible("country fraction for " + cc + " must be in [0,1]");
    mix += f;
  }
  if (mix > 1.0 + 1e-9) infeasible("country fractions sum to more than 1");
  if (spec.n_transit == 0 && spec.n_regional > 1) {
    infeasible("without transits, more than one regional AS leaves the hierarchy disconnected");
  }
  if (spec.n_transit == 0 && spec.n_regional == 0 && spec.n_stub > 1) {
    infeasible("more than one stub needs at least one provider AS");
  }
  if (spec.n_targets > 0 && spec.n_stub == 0) infeasible("targets are placed at stubs, but n_stub is 0");
  if (spec.n_targets > 65536) infeasible("at most 65536 targets");
  if (spec.n_transit + spec.n_regional + spec.n_stub > 1'000'000) infeasible("at most 1000000 ASes");
}

DatasetBundle generate(const SynthSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);
  const Tiers tiers = assign_asns(spec);

  AsGraphBuilder b;
  for (const auto* tier : {&tiers.transit, &tiers.regional, &tiers.stub}) {
    for (Asn a : *tier) b.add_node(a);
  }
  for (std::size_t i = 0; i < tiers.transit.size(); ++i) {
    for (std::size_t j = i + 1; j < tiers.transit.size(); ++j) b.add_peer(tiers.transit[i], tiers.transit[j]);
  }
  for (Asn r : tiers.regional) {
    if (!tiers.transit.empty()) attach(rng, b, r, tiers.transit);
  }
  for (Asn s : tiers.stub) {
    // Mostly regional upstreams, occasionally a transit directly.
    const bool direct = tiers.regional.empty() || (!tiers.transit.empty() && rng.chance(0.1));
    const auto& pool = direct ? tiers.transit : tiers.regional;
    if (!pool.empty()) attach(rng, b, s, pool);
  }

  DatasetParts parts;
  parts.edges = b.build().edges();
  std::set<std::pair<Asn, Asn>> related;
  for (const auto& e : parts.edges) {
    auto key = std::minmax(e.first, e.second);
    related.insert({key.first, key.second});
  }
  add_tier_peers(rng, parts.edges, tiers.regional, spec.peer_density, related);
  add_tier_peers(rng, parts.edges, tiers.stub, spec.peer_density, related);

  if (!spec.country_mix.empty()) {
    for (const auto* tier : {&tiers.transit, &tiers.regional, &tiers.stub}) {
      for (Asn a : *tier) {
        double u = rng.unit();
        for (const auto& [cc, f] : spec.country_mix) {
          if (u < f) {
            parts.countries[a] = cc;
            break;
          }
          u -= f;
        }
      }
    }
  }

  for (std::size_t i = 0; i < spec.n_targets; ++i) {
    Prefix p = nth_prefix(kTargetBase, i);
    parts.target_prefixes.push_back(p);
    parts.origins[p].insert(pick(rng, tiers.stub));
  }

  std::size_t resolver_prefixes = 0;
  for (const auto* tier : {&tiers.regional, &tiers.stub}) {
    for (Asn a : *tier) {
      if (!rng.chance(spec.resolver_fraction)) continue;
      std::size_t n = 1 + rng.below(3);
      for (std::size_t k = 0; k < n; ++k) {
        parts.resolver_inventory[a][nth_prefix(kResolverBase, resolver_prefixes++)] = 1 + rng.below(50);
      }
    }
  }

  add_router_traces(rng, spec, tiers.transit, parts);

  // Known paths emulate what route collectors see: a sample of the routes the
  // topology actually selects.
  if (spec.known_path_fraction > 0.0 && !parts.target_prefixes.empty()) {
    DatasetParts routing_only;
    routing_only.edges = parts.edges;
    routing_only.origins = parts.origins;
    auto bundle = assemble_bundle(routing_only);
    auto table = infer_routes(bundle.graph, {}, parts.target_prefixes);
    for (const auto& per_target : table.targets()) {
      for (const auto& route : per_target.routes) {
        if (route.path.hops.size() < 2) continue;
        if (rng.chance(spec.known_path_fraction)) parts.known_paths.push_back(route.path);
      }
    }
  }

  return assemble_bundle(std::move(parts));
}

SynthSpec parse_spec(std::istream& in) {
  SynthSpec spec;
  auto as_count = [](std::string_view v) {
    auto n = text::to_uint(v);
    if (!n) throw ParseError(0, "expected a non-negative integer, got '" + std::string(v) + "'");
    return static_cast<std::size_t>(*n);
  };
  auto as_fraction = [](std::string_view v) {
    double d = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(d)) {
      throw ParseError(0, "expected a number, got '" + std::string(v) + "'");
    }
    return d;
  };
  text::for_each_line(in, [&](std::string_view line, std::size_t) {
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(0, "expected key = value");
    auto key = text::trim(line.substr(0, eq));
    auto value = text::trim(line.substr(eq + 1));
    if (key == "seed") {
      auto n = text::to_uint(value);
      if (!n) throw ParseError(0, "seed must be an unsigned 64-bit integer");
      spec.seed = *n;
    } else if (key == "n_stub") {
      spec.n_stub = as_count(value);
    } else if (key == "n_regional") {
      spec.n_regional = as_count(value);
    } else if (key == "n_transit") {
      spec.n_transit = as_count(value);
    } else if (key == "n_targets") {
      spec.n_targets = as_count(value);
    } else if (key == "traces_per_transit") {
      spec.traces_per_transit = as_count(value);
    } else if (key == "peer_density") {
      spec.peer_density = as_fraction(value);
    } else if (key == "known_path_fraction") {
      spec.known_path_fraction = as_fraction(value);
    } else if (key == "resolver_fraction") {
      spec.resolver_fraction = as_fraction(value);
    } else if (key == "country_mix") {
      spec.country_mix.clear();
      if (value.empty()) return;
      for (auto item : text::split(value, ',')) {
        auto kv = text::split(text::trim(item), ':');
        if (kv.size() != 2) throw ParseError(0, "country_mix entries look like CC:fraction");
        spec.country_mix[std::string(text::trim(kv[0]))] = as_fraction(text::trim(kv[1]));
      }
    } else {
      throw ParseError(0, "unknown synth key '" + std::string(key) + "'");
    }
  });
  validate(spec);
  return spec;
}

namespace {

std::string shortest(double d) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, ptr);
}

}  // namespace

void write_spec(std::ostream& out, const SynthSpec& spec) {
  out << "seed = " << spec.seed << '\n'
      << "n_stub = " << spec.n_stub << '\n'
      << "n_regional = " << spec.n_regional << '\n'
      << "n_transit = " << spec.n_transit << '\n'
      << "n_targets = " << spec.n_targets << '\n'
      << "peer_density = " << shortest(spec.peer_density) << '\n'
      << "known_path_fraction = " << shortest(spec.known_path_fraction) << '\n'
      << "resolver_fraction = " << shortest(spec.resolver_fraction) << '\n'
      << "traces_per_transit = " << spec.traces_per_transit << '\n';
  out << "country_mix = ";
  bool first = true;
  for (const auto& [cc, f] : spec.country_mix) {
    out << (first ? "" : ",") << cc << ':' << shortest(f);
    first = false;
  }
  out << '\n';
}

AsGraph random_graph(std::uint64_t seed, std::size_t max_nodes, const Prefix& target) {
  if (max_nodes < 2) throw Error(ErrorKind::InvalidArgument, "random graphs need at least 2 nodes");
  Rng rng(seed);
  const std::size_t n = 2 + rng.below(max_nodes - 1);
  std::vector<std::size_t> rank(n);
  std::iota(rank.begin(), rank.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(rank[i - 1], rank[rng.below(i)]);
  const double p_link = 0.15 + 0.3 * rng.unit();
  const double p_peer = 0.5 * rng.unit();
  AsGraphBuilder b;
  for (std::size_t i = 0; i < n; ++i) b.add_node(Asn(i + 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!rng.chance(p_link)) continue;
      if (rng.chance(p_peer)) {
        b.add_peer(Asn(i + 1), Asn(j + 1));
      } else if (rank[i] > rank[j]) {
        b.add_provider_customer(Asn(i + 1), Asn(j + 1));
      } else {
        b.add_provider_customer(Asn(j + 1), Asn(i + 1));
      }
    }
  }
  b.add_origin(target, Asn(1 + rng.below(n)));
  if (rng.chance(0.2)) b.add_origin(target, Asn(1 + rng.below(n)));
  return b.build();
}

}  // namespace chokemap::synth
