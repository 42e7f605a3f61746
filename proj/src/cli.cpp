#include "chokemap/cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "chokemap/chokepoint.hpp"
#include "chokemap/dnsmap.hpp"
#include "chokemap/error.hpp"
#include "chokemap/hijack.hpp"
#include "chokemap/ingest.hpp"
#include "chokemap/intraas.hpp"
#include "chokemap/pathinfer.hpp"
#include "chokemap/probe.hpp"
#include "chokemap/report.hpp"
#include "chokemap/synth.hpp"
#include "text_util.hpp"

namespace chokemap::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Settings {
  // shared
  std::string data_dir;
  std::map<std::string, std::string> files;  // dataset role -> path
  std::string out_dir = "chokemap-out";
  std::string home = "IN";
  unsigned jobs = 1;
  bool timestamp = false;
  double threshold = 0.95;
  double router_threshold = 0.90;
  std::string mode = "rank";
  bool no_count_source = false;
  std::vector<std::string> interceptor_countries;
  std::vector<std::string> source_countries;

  // per command
  std::vector<std::string> ases;
  bool reveal_router_ids = false;
  std::string targets_file;
  unsigned dns_timeout_ms = 2000;
  unsigned dns_concurrency = 16;
  double dns_rate = 20.0;
  std::string test_name = "www.example.com";
  unsigned dns_port = 53;
  unsigned dns_max_queries = 2;
  std::string attacker;
  std::string target;
  std::vector<std::string> claimed_path;
  bool neighbors_only = false;
  std::size_t top = 10;
  std::vector<std::string> attacker_countries;
  std::vector<std::string> censors;
  std::string corpus;
  std::string signatures;
  unsigned probe_timeout_ms = 5000;
  unsigned retries = 0;
  unsigned max_redirects = 5;
  unsigned probe_concurrency = 8;
  double probe_rate = 5.0;
  std::string user_agent = "chokemap-probe/0.1";
  bool insecure = false;
  std::uint64_t seed = 1;
  std::string spec_file;
  unsigned trials = 100;
  unsigned max_nodes = 12;
};

// Everything a command needs to produce its reports.
struct Run {
  const Settings& s;
  std::ostream& out;
  std::string command;  // report directory name
  RunMetadata meta;

  fs::path dir() const { return fs::path(s.out_dir) / command; }

  fs::path prepare() const {
    std::error_code ec;
    fs::create_directories(dir(), ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + dir().string() + ": " + ec.message());
    return dir();
  }

  json document(json body) const {
    json doc;
    doc["metadata"] = meta.to_json();
    doc["result"] = std::move(body);
    return doc;
  }

  void write_report(const std::string& name, json body) const {
    write_json_file(prepare() / name, document(std::move(body)));
  }
};

const CLI::Validator kFraction(
    [](std::string& text) -> std::string {
      double v = 0;
      try {
        v = std::stod(text);
      } catch (...) {
        return "not a number: " + text;
      }
      return v > 0.0 && v <= 1.0 ? "" : "must be in (0, 1]";
    },
    "(0,1]");

std::vector<Asn> parse_asns(const std::vector<std::string>& items) {
  std::vector<Asn> out;
  for (const auto& i : items) out.push_back(parse_asn(text::trim(i)));
  return out;
}

std::set<std::string> country_set(const std::vector<std::string>& items) {
  std::set<std::string> out;
  for (const auto& c : items) {
    if (!is_country_code(c)) throw Error(ErrorKind::Config, "not a country code: '" + c + "'");
    out.insert(c);
  }
  return out;
}

CoverageOptions coverage_options(const Settings& s) {
  CoverageOptions o;
  o.mode = parse_coverage_mode(s.mode);
  o.count_source = !s.no_count_source;
  o.scope.interceptor_countries = country_set(s.interceptor_countries);
  o.scope.source_countries = country_set(s.source_countries);
  return o;
}

// Dataset files in play, by role.
std::map<std::string, fs::path> dataset_files(const Settings& s) {
  std::map<std::string, fs::path> out;
  if (!s.data_dir.empty()) {
    auto paths = DatasetPaths::from_directory(s.data_dir);
    auto put = [&](const char* role, const std::optional<fs::path>& p) {
      if (p) out[role] = *p;
    };
    put("relationships", paths.relationships);
    put("known-paths", paths.known_paths);
    put("prefix-origins", paths.prefix_origins);
    put("countries", paths.countries);
    put("resolvers", paths.resolvers);
    put("router-traces", paths.router_traces);
    put("aliases", paths.aliases);
    put("targets", paths.targets);
  }
  for (const auto& [role, path] : s.files) {
    if (!path.empty()) out[role] = path;
  }
  return out;
}

DatasetBundle load_data(Run& run, Diagnostics* diag) {
  auto files = dataset_files(run.s);
  if (files.empty()) throw Error(ErrorKind::Config, "no dataset given; use --data or the per-file options");
  DatasetPaths paths;
  auto get = [&](const char* role) -> std::optional<fs::path> {
    auto it = files.find(role);
    if (it == files.end()) return std::nullopt;
    return it->second;
  };
  paths.relationships = get("relationships");
  paths.known_paths = get("known-paths");
  paths.prefix_origins = get("prefix-origins");
  paths.countries = get("countries");
  paths.resolvers = get("resolvers");
  paths.router_traces = get("router-traces");
  paths.aliases = get("aliases");
  paths.targets = get("targets");
  for (const auto& [role, path] : files) run.meta.datasets[role] = sha256_file(path);
  return load_bundle(paths, diag);
}

std::vector<Prefix> require_targets(const DatasetBundle& bundle) {
  if (bundle.target_prefixes.empty()) {
    throw Error(ErrorKind::Config, "no target prefixes loaded; supply a targets file");
  }
  return bundle.target_prefixes;
}

InferenceOptions inference(const Settings& s) { return {std::max(1u, s.jobs)}; }

std::string pct(double fraction) { return fmt::format("{:.2f}%", 100.0 * fraction); }

json key_ases_json(const CoverageReport& report, double threshold) {
  auto keys = select_key_ases(report, threshold);
  json list = json::array();
  for (Asn a : keys) list.push_back(a.value());
  return {{"threshold", threshold},
          {"count", keys.size()},
          {"ases", list},
          {"covered_fraction", round4(report.cumulative[keys.size() - 1].fraction)}};
}

// --- commands ---------------------------------------------------------------

int cmd_ingest_validate(Run& run) {
  Diagnostics diag;
  auto bundle = load_data(run, &diag);
  json body{{"ases", bundle.graph.size()},
            {"edges", bundle.graph.edge_count()},
            {"countries", bundle.graph.countries().size()},
            {"prefix_origins", bundle.graph.origins().size()},
            {"known_paths", bundle.known_paths.size()},
            {"resolver_ases", bundle.resolver_inventory.size()},
            {"router_traces", bundle.router_traces.size()},
            {"alias_ips", bundle.aliases.size()},
            {"targets", bundle.target_prefixes.size()},
            {"warnings", diag.warnings}};
  run.write_report("validate.json", body);
  for (const auto& w : diag.warnings) run.out << "warning: " << w << '\n';
  run.out << fmt::format("ingest: {} ASes, {} edges, {} targets, {} warnings\n", bundle.graph.size(),
                         bundle.graph.edge_count(), bundle.target_prefixes.size(), diag.warnings.size());
  return kExitOk;
}

int cmd_infer(Run& run) {
  auto bundle = load_data(run, nullptr);
  auto table = infer_routes(bundle.graph, bundle.known_paths, require_targets(bundle), inference(run.s));
  auto dir = run.prepare();
  {
    std::ofstream f(dir / "routes.txt");
    write_routing_table(f, table);
    if (!f) throw Error(ErrorKind::Io, "cannot write routes.txt");
  }
  std::ostringstream csv;
  csv << "target,routes,known_customer,known_peer,known_provider,inferred_customer,inferred_peer,inferred_provider\n";
  json per_target = json::array();
  for (const auto& c : route_count_summary(table)) {
    using P = Provenance;
    using C = RouteClass;
    csv << fmt::format("{},{},{},{},{},{},{},{}\n", c.target.to_string(), c.total, c.of(P::Known, C::Customer),
                       c.of(P::Known, C::Peer), c.of(P::Known, C::Provider), c.of(P::Inferred, C::Customer),
                       c.of(P::Inferred, C::Peer), c.of(P::Inferred, C::Provider));
    per_target.push_back({{"target", c.target.to_string()}, {"routes", c.total}});
  }
  write_text_file(dir / "summary.csv", csv.str());
  const auto& st = table.stats();
  run.write_report("summary.json", {{"targets", table.targets().size()},
                                    {"routes", table.route_count()},
                                    {"known_paths_used", st.known_paths_used},
                                    {"known_policy_violations", st.known_policy_violations},
                                    {"known_paths_ignored", st.known_paths_ignored},
                                    {"per_target", per_target}});
  run.out << fmt::format("infer: {} routes to {} targets\n", table.route_count(), table.targets().size());
  return kExitOk;
}

void write_coverage(Run& run, const CoverageReport& report, json extra) {
  auto dir = run.prepare();
  std::ostringstream csv;
  write_coverage_csv(csv, report);
  write_text_file(dir / "cdf.csv", csv.str());
  extra["coverage"] = to_json(report);
  run.write_report("report.json", std::move(extra));
}

int cmd_rank_as(Run& run) {
  auto bundle = load_data(run, nullptr);
  auto table = infer_routes(bundle.graph, bundle.known_paths, require_targets(bundle), inference(run.s));
  auto report = rank_interceptors(table, bundle.graph, coverage_options(run.s));
  auto keys = key_ases_json(report, run.s.threshold);
  run.out << fmt::format("rank-as: {} ASes cover {} of {} paths\n", keys["count"].get<std::size_t>(),
                         pct(keys["covered_fraction"].get<double>()), report.total_paths);
  write_coverage(run, report, {{"key_ases", keys}});
  return kExitOk;
}

int cmd_coverage(Run& run) {
  auto bundle = load_data(run, nullptr);
  auto table = infer_routes(bundle.graph, bundle.known_paths, require_targets(bundle), inference(run.s));
  auto opts = coverage_options(run.s);
  opts.mode = CoverageMode::Rank;
  auto rank = rank_interceptors(table, bundle.graph, opts);
  opts.mode = CoverageMode::Greedy;
  auto greedy = rank_interceptors(table, bundle.graph, opts);

  std::ostringstream csv;
  csv << "k,rank_fraction,greedy_fraction\n";
  csv << "0,0.0000,0.0000\n";
  for (std::size_t k = 0; k < rank.cumulative.size(); ++k) {
    csv << fmt::format("{},{:.4f},{:.4f}\n", k + 1, rank.cumulative[k].fraction, greedy.cumulative[k].fraction);
  }
  write_text_file(run.prepare() / "cdf.csv", csv.str());

  json body{{"rank", to_json(rank)}, {"greedy", to_json(greedy)}};
  if (!run.s.ases.empty()) {
    auto set = parse_asns(run.s.ases);
    std::set<Asn> chosen(set.begin(), set.end());
    std::size_t hit = 0;
    for (const auto& t : table.targets()) {
      for (const auto& r : t.routes) {
        auto who = interceptors_of(r.path.hops, opts.count_source);
        hit += std::any_of(who.begin(), who.end(), [&](Asn a) { return chosen.contains(a); });
      }
    }
    json list = json::array();
    for (Asn a : chosen) list.push_back(a.value());
    double fraction = rank.total_paths ? static_cast<double>(hit) / static_cast<double>(rank.total_paths) : 0.0;
    body["set"] = {{"ases", list}, {"covered", hit}, {"fraction", round4(fraction)}};
    run.out << fmt::format("coverage: the given {} ASes intercept {} of {} paths\n", chosen.size(), pct(fraction),
                           rank.total_paths);
  }
  run.write_report("report.json", body);
  run.out << fmt::format("coverage: {} ranked ASes over {} paths\n", rank.ranked.size(), rank.total_paths);
  return kExitOk;
}

int cmd_routers(Run& run) {
  auto bundle = load_data(run, nullptr);
  if (bundle.router_traces.empty()) throw Error(ErrorKind::Config, "no router traces loaded");
  auto topology = build_router_topology(bundle.router_traces, bundle.aliases);
  auto selections = analyze_routers(topology, run.s.router_threshold);
  const bool hashed = !run.s.reveal_router_ids;
  json list = json::array();
  std::ostringstream csv;
  csv << "as,edge_routers,core_routers,heavy_hitters,rule,required,coverage_fraction\n";
  for (const auto& sel : selections) {
    list.push_back(to_json(sel, hashed));
    csv << fmt::format("{},{},{},{},{},{},{:.4f}\n", sel.as.value(), sel.edge_count, sel.core_count,
                       sel.heavy_hitter_count, to_string(sel.rule), sel.selected.size(), sel.coverage_fraction);
  }
  write_text_file(run.prepare() / "routers.csv", csv.str());
  run.write_report("routers.json", {{"threshold", run.s.router_threshold}, {"ases", list}});
  run.out << fmt::format("routers: {} ASes analysed\n", selections.size());
  return kExitOk;
}

int cmd_dns_coverage(Run& run) {
  auto bundle = load_data(run, nullptr);
  if (bundle.resolver_inventory.empty()) throw Error(ErrorKind::Config, "no resolver inventory loaded");
  auto targets = select_resolver_targets(bundle.resolver_inventory);
  auto report =
      dns_coverage(bundle.graph, bundle.known_paths, targets, coverage_options(run.s), inference(run.s));
  auto keys = key_ases_json(report, run.s.threshold);
  run.out << fmt::format("dns-coverage: {} resolver prefixes; {} ASes cover {} of {} paths\n",
                         targets.targets.size(), keys["count"].get<std::size_t>(),
                         pct(keys["covered_fraction"].get<double>()), report.total_paths);
  write_coverage(run, report, {{"resolver_targets", to_json(targets)}, {"key_ases", keys}});
  return kExitOk;
}

int cmd_dns_probe(Run& run) {
  std::ifstream in(run.s.targets_file);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + run.s.targets_file);
  auto addresses = load_probe_targets(in);
  run.meta.datasets["probe-targets"] = sha256_file(run.s.targets_file);
  DnsProbeConfig cfg;
  cfg.timeout = std::chrono::milliseconds(run.s.dns_timeout_ms);
  cfg.max_concurrency = run.s.dns_concurrency;
  cfg.rate_per_sec = run.s.dns_rate;
  cfg.test_name = run.s.test_name;
  cfg.port = static_cast<std::uint16_t>(run.s.dns_port);
  cfg.max_queries = run.s.dns_max_queries;
  auto results = probe_resolvers(addresses, cfg);
  std::ostringstream lines;
  write_probe_results(lines, results);
  write_text_file(run.prepare() / "results.txt", lines.str());
  json list = json::array();
  std::map<std::string, std::size_t> tally;
  for (const auto& r : results) {
    list.push_back(to_json(r));
    ++tally[std::string(to_string(r.status))];
  }
  run.write_report("results.json", {{"counts", tally}, {"results", list}});
  run.out << fmt::format("dns-probe: {} resolvers probed\n", results.size());
  return kExitOk;
}

int cmd_hijack(Run& run) {
  if (run.s.attacker.empty() || run.s.target.empty()) {
    throw Error(ErrorKind::Config, "hijack needs --attacker and --target (or the rank subcommand)");
  }
  auto bundle = load_data(run, nullptr);
  FakeAdvertisement adv{parse_asn(run.s.attacker), Prefix::parse(run.s.target), parse_asns(run.s.claimed_path)};
  std::vector<Prefix> one{adv.target};
  auto baseline = infer_routes(bundle.graph, bundle.known_paths, one, inference(run.s));
  HijackOptions opts{run.s.neighbors_only, run.s.home};
  auto outcome = simulate_hijack(bundle.graph, baseline, adv, opts);

  std::ostringstream csv;
  csv << "as,rule,route_class,path\n";
  for (const auto& [asn, route] : outcome.poisoned) {
    std::string path;
    for (Asn a : route.path) path += (path.empty() ? "" : " ") + to_string(a);
    csv << fmt::format("{},{},{},{}\n", asn.value(), static_cast<int>(route.rule), to_string(route.route_class), path);
  }
  write_text_file(run.prepare() / "poisoned.csv", csv.str());
  run.write_report("outcome.json", to_json(outcome));
  run.out << fmt::format("hijack: AS{} poisons {} ASes ({} home, {} foreign, {} unknown)\n", adv.attacker.value(),
                         outcome.poisoned.size(), outcome.counts.home, outcome.counts.foreign, outcome.counts.unknown);
  return kExitOk;
}

int cmd_hijack_rank(Run& run) {
  auto bundle = load_data(run, nullptr);
  auto baseline = infer_routes(bundle.graph, bundle.known_paths, require_targets(bundle), inference(run.s));
  AttackerRankOptions opts;
  opts.top = run.s.top;
  opts.candidate_countries = country_set(run.s.attacker_countries);
  opts.hijack = {run.s.neighbors_only, run.s.home};
  opts.jobs = std::max(1u, run.s.jobs);
  auto ranking = rank_attackers(bundle.graph, baseline, opts);

  std::ostringstream csv;
  csv << "attacker,degree,affected,home,foreign,unknown\n";
  json list = json::array();
  for (const auto& a : ranking) {
    csv << fmt::format("{},{},{},{},{},{}\n", a.attacker.value(), a.degree, a.affected.size(), a.counts.home,
                       a.counts.foreign, a.counts.unknown);
    list.push_back(to_json(a));
  }
  write_text_file(run.prepare() / "ranking.csv", csv.str());
  json targets = json::array();
  for (const auto& t : baseline.targets()) targets.push_back(t.target.to_string());
  run.write_report("ranking.json", {{"targets", targets}, {"attackers", list}});
  run.out << fmt::format("hijack rank: {} attackers over {} targets\n", ranking.size(), targets.size());
  return kExitOk;
}

int cmd_collateral(Run& run) {
  auto bundle = load_data(run, nullptr);
  if (!bundle.graph.has_country_data()) throw Error(ErrorKind::MissingCountryData, "collateral needs country tags");
  auto table = infer_routes(bundle.graph, bundle.known_paths, require_targets(bundle), inference(run.s));
  const bool count_source = !run.s.no_count_source;
  std::set<Asn> censors;
  std::string how;
  if (!run.s.censors.empty()) {
    auto list = parse_asns(run.s.censors);
    censors.insert(list.begin(), list.end());
    how = "given";
  } else {
    // Default censors: the home country's key ASes at the coverage threshold.
    auto opts = coverage_options(run.s);
    opts.scope.interceptor_countries = {run.s.home};
    auto report = rank_interceptors(table, bundle.graph, opts);
    for (Asn a : select_key_ases(report, run.s.threshold)) censors.insert(a);
    how = "home key ASes";
  }
  auto report = collateral_damage(table, censors, run.s.home, bundle.graph, count_source);
  std::ostringstream csv;
  csv << "bucket,count,fraction\n";
  csv << fmt::format("home,{},{:.4f}\n", report.home_origin.count, report.home_origin.fraction);
  csv << fmt::format("foreign,{},{:.4f}\n", report.foreign_origin.count, report.foreign_origin.fraction);
  csv << fmt::format("unknown,{},{:.4f}\n", report.unknown_origin.count, report.unknown_origin.fraction);
  for (const auto& [cc, n] : report.per_country) csv << fmt::format("country:{},{},\n", cc, n);
  write_text_file(run.prepare() / "collateral.csv", csv.str());
  run.write_report("collateral.json", {{"censor_selection", how}, {"collateral", to_json(report)}});
  run.out << fmt::format("collateral: {} censors intercept {} paths, {} of all paths from abroad\n", censors.size(),
                         report.intercepted, pct(report.foreign_origin.fraction));
  return kExitOk;
}

int cmd_probe(Run& run) {
  std::ifstream in(run.s.corpus);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + run.s.corpus);
  auto corpus = load_corpus(in);
  run.meta.datasets["corpus"] = sha256_file(run.s.corpus);
  std::vector<std::string> signatures = default_signatures();
  if (!run.s.signatures.empty()) {
    std::ifstream sig(run.s.signatures);
    if (!sig) throw Error(ErrorKind::Io, "cannot open " + run.s.signatures);
    signatures = load_signatures(sig);
    run.meta.datasets["signatures"] = sha256_file(run.s.signatures);
  }
  ProbeConfig cfg;
  cfg.timeout = std::chrono::milliseconds(run.s.probe_timeout_ms);
  cfg.retries = run.s.retries;
  cfg.max_redirects = run.s.max_redirects;
  cfg.max_concurrency = run.s.probe_concurrency;
  cfg.rate_per_sec = run.s.probe_rate;
  cfg.user_agent = run.s.user_agent;
  cfg.verify_tls = !run.s.insecure;
  auto summary = probe_corpus(corpus, signatures, cfg);
  auto dir = run.prepare();
  std::ostringstream csv, lines;
  write_summary_csv(csv, summary);
  write_url_results(lines, summary.results);
  write_text_file(dir / "summary.csv", csv.str());
  write_text_file(dir / "results.txt", lines.str());
  run.write_report("summary.json", to_json(summary));
  for (const auto& e : summary.errors) run.out << "not probed: " << e << '\n';
  run.out << fmt::format("probe: {} URLs probed{}\n", summary.probed, summary.partial ? " (partial)" : "");
  return kExitOk;
}

int cmd_synth(Run& run, bool seed_given) {
  synth::SynthSpec spec;
  if (!run.s.spec_file.empty()) {
    std::ifstream in(run.s.spec_file);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + run.s.spec_file);
    spec = synth::parse_spec(in);
    run.meta.datasets["spec"] = sha256_file(run.s.spec_file);
  }
  if (seed_given) spec.seed = run.s.seed;
  auto bundle = synth::generate(spec);
  auto dir = run.prepare();
  write_bundle(dir, bundle);
  std::ostringstream spec_text;
  synth::write_spec(spec_text, spec);
  write_text_file(dir / "spec.txt", spec_text.str());
  run.write_report("report.json", {{"seed", spec.seed},
                                   {"ases", bundle.graph.size()},
                                   {"edges", bundle.graph.edge_count()},
                                   {"targets", bundle.target_prefixes.size()},
                                   {"known_paths", bundle.known_paths.size()}});
  run.out << fmt::format("synth: {} ASes, {} edges written to {}\n", bundle.graph.size(), bundle.graph.edge_count(),
                         dir.string());
  return kExitOk;
}

int cmd_oracle_check(Run& run) {
  if (run.s.max_nodes < 2 || run.s.max_nodes > kOracleMaxNodes) {
    throw Error(ErrorKind::Config, fmt::format("--max-nodes must be in [2, {}]", kOracleMaxNodes));
  }
  const Prefix target = Prefix::parse("10.0.0.0/24");
  std::size_t agree = 0;
  json failures = json::array();
  for (unsigned t = 0; t < run.s.trials; ++t) {
    const std::uint64_t seed = run.s.seed + t;
    auto g = synth::random_graph(seed, run.s.max_nodes, target);
    auto why = oracle_disagreement(g, target);
    if (!why) {
      ++agree;
    } else {
      failures.push_back({{"seed", seed}, {"detail", *why}});
    }
  }
  run.write_report("report.json", {{"trials", run.s.trials},
                                   {"agree", agree},
                                   {"max_nodes", run.s.max_nodes},
                                   {"first_seed", run.s.seed},
                                   {"disagreements", failures}});
  run.out << fmt::format("{}/{} agree\n", agree, run.s.trials);
  return agree == run.s.trials ? kExitOk : kExitFailure;
}

// --- plumbing ---------------------------------------------------------------

void emit_error(std::ostream& err, std::string_view kind, const std::string& message, const std::string& command,
                std::optional<std::size_t> line = std::nullopt) {
  json e{{"kind", kind}, {"message", message}};
  if (!command.empty()) e["command"] = command;
  if (line) e["line"] = *line;
  err << json{{"error", e}}.dump() << '\n';
}

// Effective settings for the config hash: every option of the selected
// command chain except file locations. Input contents are covered by the
// dataset checksums instead, so relocated copies hash the same.
void collect_config(const CLI::App* app, const std::string& prefix, std::map<std::string, std::string>& out) {
  static const std::set<std::string> skip{"help",          "config",     "out",       "timestamp",  "version",
                                          "data",          "relationships", "known-paths", "prefix-origins",
                                          "countries",     "resolvers",  "router-traces", "aliases", "targets",
                                          "targets-file",  "corpus",     "signatures", "spec"};
  for (const CLI::Option* opt : app->get_options()) {
    const auto& name = opt->get_single_name();
    if (skip.contains(name)) continue;
    std::string value;
    if (opt->get_expected_min() == 0) {
      value = opt->count() > 0 && opt->as<bool>() ? "true" : "false";
    } else if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    } else if (opt->get_expected_max() <= 1) {
      value = opt->get_default_str();
    }
    out[prefix + name] = value;
  }
  for (const CLI::App* sub : app->get_subcommands()) collect_config(sub, prefix + sub->get_name() + ".", out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Settings s;
  CLI::App app{"chokemap: chokepoint, hijack and censorship-measurement analyses"};
  app.name("chokemap");
  app.option_defaults()->always_capture_default();
  app.allow_config_extras(false);
  app.require_subcommand(1);
  app.set_version_flag("--version", CHOKEMAP_VERSION);
  app.set_config("--config", "", "key = value settings file; flags override it")->envname("CHOKEPOINT_CONFIG");

  app.add_option("--data", s.data_dir, "Dataset directory with the conventional file names");
  for (const char* role : {"relationships", "known-paths", "prefix-origins", "countries", "resolvers",
                           "router-traces", "aliases", "targets"}) {
    app.add_option(std::string("--") + role, s.files[role], std::string("Path of the ") + role + " file")
        ->check(CLI::ExistingFile);
  }
  app.add_option("--out", s.out_dir, "Report root; each command writes to <out>/<command>/");
  app.add_option("--home", s.home, "Home country code");
  app.add_option("--jobs", s.jobs, "Worker threads for inference and hijack ranking")->check(CLI::Range(1u, 1024u));
  app.add_flag("--timestamp", s.timestamp, "Add a wall-clock timestamp to report metadata");
  app.add_option("--threshold", s.threshold, "AS coverage threshold")->check(kFraction);
  app.add_option("--router-threshold", s.router_threshold, "Router heavy-hitter threshold")->check(kFraction);
  app.add_option("--mode", s.mode, "Coverage order")->check(CLI::IsMember({"rank", "greedy"}));
  app.add_flag("--no-count-source", s.no_count_source, "Do not count a path's source AS as an interceptor");
  app.add_option("--interceptor-country", s.interceptor_countries, "Only rank ASes of these countries")
      ->delimiter(',');
  app.add_option("--source-country", s.source_countries, "Only count paths from ASes of these countries")
      ->delimiter(',');

  auto* ingest = app.add_subcommand("ingest", "Dataset checks");
  ingest->require_subcommand(1);
  auto* validate = ingest->add_subcommand("validate", "Load every dataset file and report counts and warnings");
  auto* infer = app.add_subcommand("infer", "Infer routes from every AS to the targets");
  auto* rank_as = app.add_subcommand("rank-as", "Rank interceptor ASes and pick the key set");
  auto* coverage = app.add_subcommand("coverage", "Rank and greedy coverage curves side by side");
  coverage->add_option("--ases", s.ases, "Also report the coverage of this AS set")->delimiter(',');
  auto* routers = app.add_subcommand("routers", "Edge/core split and filter-router selection per AS");
  routers->add_flag("--reveal-router-ids", s.reveal_router_ids, "Report raw router ids instead of hashes");
  auto* dns_cov = app.add_subcommand("dns-coverage", "Chokepoints on paths to resolver prefixes");
  auto* dns_probe = app.add_subcommand("dns-probe", "Classify an explicit list of DNS resolvers");
  dns_probe->add_option("--targets-file", s.targets_file, "One resolver IPv4 address per line")
      ->required()
      ->check(CLI::ExistingFile);
  dns_probe->add_option("--timeout-ms", s.dns_timeout_ms, "Per-query timeout")->check(CLI::Range(1u, 600000u));
  dns_probe->add_option("--max-concurrency", s.dns_concurrency)->check(CLI::Range(1u, 1024u));
  dns_probe->add_option("--rate-per-sec", s.dns_rate, "Global query rate; 0 disables the limit")
      ->check(CLI::NonNegativeNumber);
  dns_probe->add_option("--test-name", s.test_name, "Name to resolve");
  dns_probe->add_option("--port", s.dns_port)->check(CLI::Range(1u, 65535u));
  dns_probe->add_option("--max-queries", s.dns_max_queries, "Queries per resolver")->check(CLI::Range(1u, 2u));
  auto* hijack = app.add_subcommand("hijack", "Simulate a fake route advertisement");
  hijack->add_option("--attacker", s.attacker, "Attacking ASN");
  hijack->add_option("--target", s.target, "Hijacked prefix");
  hijack->add_option("--claimed-path", s.claimed_path, "Announced path, attacker first")->delimiter(',');
  hijack->add_flag("--neighbors-only", s.neighbors_only, "Stop after the attacker's direct neighbours");
  hijack->require_subcommand(0, 1);
  auto* hijack_rank = hijack->add_subcommand("rank", "Rank high-degree attackers over all targets");
  hijack_rank->add_option("--top", s.top, "Number of candidate attackers")->check(CLI::Range(1u, 1000000u));
  hijack_rank->add_option("--attacker-country", s.attacker_countries, "Restrict candidates to these countries")
      ->delimiter(',');
  auto* collateral = app.add_subcommand("collateral", "Split intercepted paths by origin country");
  collateral->add_option("--censors", s.censors, "Censoring ASes (default: home key ASes)")->delimiter(',');
  auto* probe = app.add_subcommand("probe", "Classify URLs as censored, open or inaccessible");
  probe->add_option("--corpus", s.corpus, "<category>|<url> lines")->required()->check(CLI::ExistingFile);
  probe->add_option("--signatures", s.signatures, "Block-page patterns, one per line")->check(CLI::ExistingFile);
  probe->add_option("--timeout-ms", s.probe_timeout_ms)->check(CLI::Range(1u, 600000u));
  probe->add_option("--retries", s.retries, "Extra attempts after transport failures")->check(CLI::Range(0u, 10u));
  probe->add_option("--max-redirects", s.max_redirects)->check(CLI::Range(0u, 50u));
  probe->add_option("--max-concurrency", s.probe_concurrency)->check(CLI::Range(1u, 256u));
  probe->add_option("--rate-per-sec", s.probe_rate, "Global request rate; 0 disables the limit")
      ->check(CLI::NonNegativeNumber);
  probe->add_option("--user-agent", s.user_agent);
  probe->add_flag("--insecure", s.insecure, "Skip TLS certificate verification");
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset bundle");
  auto* seed_opt = synth_cmd->add_option("--seed", s.seed, "Overrides the spec's seed");
  synth_cmd->add_option("--spec", s.spec_file, "key = value generator spec")->check(CLI::ExistingFile);
  auto* oracle = app.add_subcommand("oracle-check", "Compare inference with the brute-force oracle");
  oracle->add_option("--seed", s.seed, "First seed");
  oracle->add_option("--trials", s.trials)->check(CLI::Range(1u, 1000000u));
  oracle->add_option("--max-nodes", s.max_nodes)->check(CLI::Range(2u, static_cast<unsigned>(kOracleMaxNodes)));

  for (auto* sub : {ingest, validate, infer, rank_as, coverage, routers, dns_cov, dns_probe, hijack, hijack_rank,
                    collateral, probe, synth_cmd, oracle}) {
    sub->fallthrough();
  }

  std::string command;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << CHOKEMAP_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    emit_error(err, "UsageError", e.what(), "");
    err << "Run with --help for usage.\n";
    return kExitUsage;
  }

  Run r{s, out, "", {}};
  try {
    std::map<std::string, std::string> config;
    collect_config(&app, "", config);
    r.meta.config = std::move(config);
    if (s.timestamp) r.meta.timestamp = utc_timestamp();

    auto* chosen = app.get_subcommands().front();
    r.command = chosen->get_name();
    r.meta.command = r.command;
    if (chosen == ingest) {
      r.meta.command = "ingest validate";
      return cmd_ingest_validate(r);
    }
    if (chosen == infer) return cmd_infer(r);
    if (chosen == rank_as) return cmd_rank_as(r);
    if (chosen == coverage) return cmd_coverage(r);
    if (chosen == routers) return cmd_routers(r);
    if (chosen == dns_cov) return cmd_dns_coverage(r);
    if (chosen == dns_probe) return cmd_dns_probe(r);
    if (chosen == hijack) {
      if (hijack_rank->parsed()) {
        r.meta.command = "hijack rank";
        return cmd_hijack_rank(r);
      }
      return cmd_hijack(r);
    }
    if (chosen == collateral) return cmd_collateral(r);
    if (chosen == probe) return cmd_probe(r);
    if (chosen == synth_cmd) return cmd_synth(r, seed_opt->count() > 0);
    if (chosen == oracle) return cmd_oracle_check(r);
    throw Error(ErrorKind::Config, "unhandled command " + r.command);
  } catch (const ParseError& e) {
    emit_error(err, to_string(e.kind()), e.what(), r.meta.command, e.line() ? std::optional(e.line()) : std::nullopt);
  } catch (const Error& e) {
    emit_error(err, to_string(e.kind()), e.what(), r.meta.command);
  } catch (const std::exception& e) {
    emit_error(err, "InternalError", e.what(), r.meta.command);
  }
  return kExitFailure;
}

}  // namespace chokemap::cli
