#include "chokemap/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <tuple>

#include "chokemap/error.hpp"
#include "line_reader.hpp"
#include "text_util.hpp"

namespace chokemap {

namespace {

void warn(Diagnostics* diag, std::string message) {
  if (diag) diag->warn(std::move(message));
}

std::vector<std::string_view> fields(std::string_view line, std::size_t expected) {
  auto parts = text::split(line, '|');
  if (parts.size() != expected) {
    throw ParseError(0, "expected " + std::to_string(expected) + " '|'-separated fields");
  }
  for (auto& p : parts) p = text::trim(p);
  return parts;
}

}  // namespace

std::vector<AsEdge> load_relationships(std::istream& in, Diagnostics* diag) {
  std::map<std::pair<Asn, Asn>, AsEdge> edges;
  text::for_each_line(in, [&](std::string_view line, std::size_t number) {
    auto parts = text::split(line, '|');
    // serial-2 files carry a trailing source column; it is ignored.
    if (parts.size() != 3 && parts.size() != 4) throw ParseError(0, "expected <asn>|<asn>|<rel>");
    Asn a = parse_asn(parts[0]);
    Asn b = parse_asn(parts[1]);
    if (a == b) throw ParseError(0, "self-loop on AS" + to_string(a));
    auto code = text::to_int(text::trim(parts[2]));
    if (!code) throw ParseError(0, "relationship code is not an integer");
    AsEdge edge{a, b, Relationship::Peer};
    if (*code == -1) {
      edge.relationship = Relationship::ProviderToCustomer;
    } else if (*code != 0) {
      warn(diag, "line " + std::to_string(number) + ": relationship code " + std::to_string(*code) +
                     " between AS" + to_string(a) + " and AS" + to_string(b) + " treated as peer");
    }
    auto key = std::minmax(a, b);
    auto [it, inserted] = edges.try_emplace({key.first, key.second}, edge);
    if (!inserted) {
      const AsEdge& old = it->second;
      bool same = old.relationship == edge.relationship &&
                  (edge.relationship == Relationship::Peer || old.first == edge.first);
      if (!same) {
        throw Error(ErrorKind::ConflictingRelationship, "line " + std::to_string(number) +
                                                            ": conflicting relationship between AS" +
                                                            to_string(key.first) + " and AS" + to_string(key.second));
      }
    }
  });
  std::vector<AsEdge> out;
  out.reserve(edges.size());
  for (auto& [key, e] : edges) {
    if (e.relationship == Relationship::Peer && e.second < e.first) std::swap(e.first, e.second);
    out.push_back(e);
  }
  std::sort(out.begin(), out.end(), [](const AsEdge& x, const AsEdge& y) {
    return std::tie(x.first, x.second, x.relationship) < std::tie(y.first, y.second, y.relationship);
  });
  return out;
}

KnownPaths load_known_paths(std::istream& in, Diagnostics* diag) {
  KnownPaths result;
  text::for_each_line(in, [&](std::string_view line, std::size_t number) {
    auto tokens = text::split_ws(line);
    if (tokens.size() < 2) throw ParseError(0, "expected <prefix> <asn> ...");
    if (looks_like_ipv6(tokens[0])) {
      warn(diag, "line " + std::to_string(number) + ": IPv6 prefix skipped");
      return;
    }
    AsPath path{{}, Prefix::parse(tokens[0])};
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      Asn asn = parse_asn(tokens[i]);
      if (path.hops.empty() || path.hops.back() != asn) path.hops.push_back(asn);
    }
    if (!loop_free(path.hops)) {
      ++result.dropped_loops;
      return;
    }
    result.paths.push_back(std::move(path));
  });
  std::sort(result.paths.begin(), result.paths.end(), [](const AsPath& a, const AsPath& b) {
    return std::tie(a.target, a.hops) < std::tie(b.target, b.hops);
  });
  result.paths.erase(std::unique(result.paths.begin(), result.paths.end()), result.paths.end());
  if (result.dropped_loops > 0) {
    warn(diag, std::to_string(result.dropped_loops) + " known path(s) dropped because of AS loops");
  }
  return result;
}

std::map<Prefix, std::set<Asn>> load_prefix_origins(std::istream& in, Diagnostics* diag) {
  std::map<Prefix, std::set<Asn>> out;
  text::for_each_line(in, [&](std::string_view line, std::size_t number) {
    auto f = fields(line, 2);
    if (looks_like_ipv6(f[0])) {
      warn(diag, "line " + std::to_string(number) + ": IPv6 prefix skipped");
      return;
    }
    out[Prefix::parse(f[0])].insert(parse_asn(f[1]));
  });
  return out;
}

std::map<Asn, std::string> load_countries(std::istream& in, Diagnostics*) {
  std::map<Asn, std::string> out;
  text::for_each_line(in, [&](std::string_view line, std::size_t) {
    auto f = fields(line, 2);
    Asn asn = parse_asn(f[0]);
    std::string code(f[1]);
    if (!is_country_code(code)) throw ParseError(0, "invalid country code '" + code + "'");
    auto [it, inserted] = out.emplace(asn, code);
    if (!inserted && it->second != code) {
      throw ParseError(0, "AS" + to_string(asn) + " tagged with both " + it->second + " and " + code);
    }
  });
  return out;
}

ResolverInventory load_resolver_inventory(std::istream& in, Diagnostics* diag) {
  ResolverInventory out;
  text::for_each_line(in, [&](std::string_view line, std::size_t number) {
    auto f = fields(line, 3);
    if (looks_like_ipv6(f[0])) {
      warn(diag, "line " + std::to_string(number) + ": IPv6 prefix skipped");
      return;
    }
    Prefix prefix = Prefix::parse(f[0]);
    Asn asn = parse_asn(f[1]);
    auto count = text::to_uint(f[2]);
    if (!count) throw ParseError(0, "resolver count is not a non-negative integer");
    out[asn][prefix] += *count;
  });
  return out;
}

std::vector<Prefix> load_targets(std::istream& in, Diagnostics* diag) {
  std::set<Prefix> out;
  text::for_each_line(in, [&](std::string_view line, std::size_t number) {
    if (looks_like_ipv6(line)) {
      warn(diag, "line " + std::to_string(number) + ": IPv6 prefix skipped");
      return;
    }
    out.insert(Prefix::parse(line));
  });
  return {out.begin(), out.end()};
}

void write_relationships(std::ostream& out, const std::vector<AsEdge>& edges) {
  for (const auto& e : edges) {
    out << e.first.value() << '|' << e.second.value() << '|'
        << (e.relationship == Relationship::ProviderToCustomer ? "-1" : "0") << '\n';
  }
}

void write_known_paths(std::ostream& out, const std::vector<AsPath>& paths) {
  for (const auto& p : paths) {
    out << p.target.to_string();
    for (Asn a : p.hops) out << ' ' << a.value();
    out << '\n';
  }
}

void write_prefix_origins(std::ostream& out, const std::map<Prefix, std::vector<Asn>>& origins) {
  for (const auto& [prefix, asns] : origins) {
    for (Asn a : asns) out << prefix.to_string() << '|' << a.value() << '\n';
  }
}

void write_countries(std::ostream& out, const std::map<Asn, std::string>& countries) {
  for (const auto& [asn, cc] : countries) out << asn.value() << '|' << cc << '\n';
}

void write_resolver_inventory(std::ostream& out, const ResolverInventory& inventory) {
  for (const auto& [asn, prefixes] : inventory) {
    for (const auto& [prefix, count] : prefixes) out << prefix.to_string() << '|' << asn.value() << '|' << count << '\n';
  }
}

void write_targets(std::ostream& out, const std::vector<Prefix>& targets) {
  for (const auto& t : targets) out << t.to_string() << '\n';
}

DatasetBundle assemble_bundle(DatasetParts parts, Diagnostics* diag) {
  AsGraphBuilder builder;
  for (const auto& e : parts.edges) builder.add_edge(e);
  std::set<Asn> missing;
  for (const auto& p : parts.known_paths) {
    for (Asn a : p.hops) {
      if (!builder.has_node(a)) missing.insert(a);
    }
  }
  for (Asn a : missing) {
    warn(diag, "AS" + to_string(a) + " appears only in known paths; added as an isolated node");
    builder.add_node(a);
  }
  for (const auto& [asn, cc] : parts.countries) builder.set_country(asn, cc);
  for (const auto& [prefix, asns] : parts.origins) {
    for (Asn a : asns) builder.add_origin(prefix, a);
  }
  for (const auto& [asn, prefixes] : parts.resolver_inventory) {
    for (const auto& [prefix, count] : prefixes) builder.add_origin(prefix, asn);
  }
  for (const auto& t : parts.router_traces) builder.add_node(t.as);

  DatasetBundle bundle;
  bundle.graph = builder.build();
  // Same canonical order the loaders produce, so assembled and reloaded
  // bundles compare equal.
  std::sort(parts.known_paths.begin(), parts.known_paths.end(), [](const AsPath& a, const AsPath& b) {
    return std::tie(a.target, a.hops) < std::tie(b.target, b.hops);
  });
  parts.known_paths.erase(std::unique(parts.known_paths.begin(), parts.known_paths.end()), parts.known_paths.end());
  std::sort(parts.router_traces.begin(), parts.router_traces.end(), [](const RouterTrace& a, const RouterTrace& b) {
    return std::tie(a.as, a.trace_id, a.hops) < std::tie(b.as, b.trace_id, b.hops);
  });
  bundle.known_paths = std::move(parts.known_paths);
  bundle.resolver_inventory = std::move(parts.resolver_inventory);
  bundle.router_traces = std::move(parts.router_traces);
  bundle.aliases = std::move(parts.aliases);
  std::sort(parts.target_prefixes.begin(), parts.target_prefixes.end());
  parts.target_prefixes.erase(std::unique(parts.target_prefixes.begin(), parts.target_prefixes.end()),
                              parts.target_prefixes.end());
  bundle.target_prefixes = std::move(parts.target_prefixes);
  for (const auto& t : bundle.target_prefixes) {
    if (bundle.graph.origins_of(t).empty()) warn(diag, "target " + t.to_string() + " has no known origin AS");
  }
  return bundle;
}

DatasetPaths DatasetPaths::from_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorKind::Io, "dataset directory not found: " + dir.string());
  }
  auto pick = [&](const char* name) -> std::optional<std::filesystem::path> {
    auto p = dir / name;
    if (std::filesystem::exists(p)) return p;
    return std::nullopt;
  };
  DatasetPaths paths;
  paths.relationships = pick(kRelationshipsFile);
  paths.known_paths = pick(kKnownPathsFile);
  paths.prefix_origins = pick(kPrefixOriginsFile);
  paths.countries = pick(kCountriesFile);
  paths.resolvers = pick(kResolversFile);
  paths.router_traces = pick(kRouterTracesFile);
  paths.aliases = pick(kAliasesFile);
  paths.targets = pick(kTargetsFile);
  return paths;
}

std::vector<std::filesystem::path> DatasetPaths::all() const {
  std::vector<std::filesystem::path> out;
  for (const auto* p : {&relationships, &known_paths, &prefix_origins, &countries, &resolvers, &router_traces,
                        &aliases, &targets}) {
    if (*p) out.push_back(**p);
  }
  return out;
}

namespace {

template <typename Fn>
auto with_file(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return fn(in);
  } catch (const ParseError& e) {
    throw e.in_file(path.string());
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace

DatasetBundle load_bundle(const DatasetPaths& paths, Diagnostics* diag) {
  DatasetParts parts;
  if (paths.relationships) {
    parts.edges = with_file(*paths.relationships, [&](std::istream& in) { return load_relationships(in, diag); });
  }
  if (paths.known_paths) {
    parts.known_paths =
        with_file(*paths.known_paths, [&](std::istream& in) { return load_known_paths(in, diag).paths; });
  }
  if (paths.prefix_origins) {
    parts.origins = with_file(*paths.prefix_origins, [&](std::istream& in) { return load_prefix_origins(in, diag); });
  }
  if (paths.countries) {
    parts.countries = with_file(*paths.countries, [&](std::istream& in) { return load_countries(in, diag); });
  }
  if (paths.resolvers) {
    parts.resolver_inventory =
        with_file(*paths.resolvers, [&](std::istream& in) { return load_resolver_inventory(in, diag); });
  }
  if (paths.router_traces) {
    parts.router_traces =
        with_file(*paths.router_traces, [&](std::istream& in) { return load_router_traces(in, diag); });
  }
  if (paths.aliases) {
    parts.aliases = with_file(*paths.aliases, [&](std::istream& in) { return load_aliases(in, diag); });
  }
  if (paths.targets) {
    parts.target_prefixes = with_file(*paths.targets, [&](std::istream& in) { return load_targets(in, diag); });
  }
  return assemble_bundle(std::move(parts), diag);
}

void write_bundle(const std::filesystem::path& dir, const DatasetBundle& bundle) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, auto&& fn) {
    std::ofstream out(dir / name);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + (dir / name).string());
    fn(out);
  };
  write(kRelationshipsFile, [&](std::ostream& o) { write_relationships(o, bundle.graph.edges()); });
  write(kKnownPathsFile, [&](std::ostream& o) { write_known_paths(o, bundle.known_paths); });
  write(kPrefixOriginsFile, [&](std::ostream& o) { write_prefix_origins(o, bundle.graph.origins()); });
  write(kCountriesFile, [&](std::ostream& o) { write_countries(o, bundle.graph.countries()); });
  write(kResolversFile, [&](std::ostream& o) { write_resolver_inventory(o, bundle.resolver_inventory); });
  write(kRouterTracesFile, [&](std::ostream& o) { write_router_traces(o, bundle.router_traces); });
  write(kAliasesFile, [&](std::ostream& o) { write_aliases(o, bundle.aliases); });
  write(kTargetsFile, [&](std::ostream& o) { write_targets(o, bundle.target_prefixes); });
}

}  // namespace chokemap
