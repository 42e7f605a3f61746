#include "chokemap/report.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <ctime>
#include <fstream>
#include <memory>

#include <fmt/format.h>

#include "chokemap/error.hpp"

namespace chokemap {

using nlohmann::json;

std::string tool_version() { return CHOKEMAP_VERSION; }

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw Error(ErrorKind::Io, "cannot initialise SHA-256");
    }
  }
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
  std::string hex() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), digest, &len);
    std::string out;
    for (unsigned i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view data) {
  Sha256 h;
  h.update(data.data(), data.size());
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  Sha256 h;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) h.update(buf, static_cast<std::size_t>(in.gcount()));
  return h.hex();
}

double round4(double value) { return std::round(value * 1e4) / 1e4; }

std::string hash_router_id(const RouterId& id) { return "r-" + sha256_hex(id).substr(0, 16); }

std::string RunMetadata::config_hash() const {
  std::string canonical;
  for (const auto& [k, v] : config) canonical += k + "=" + v + "\n";
  return sha256_hex(canonical);
}

json RunMetadata::to_json() const {
  json j;
  j["tool"] = "chokemap";
  j["tool_version"] = tool_version();
  j["command"] = command;
  j["config"] = config;
  j["config_hash"] = config_hash();
  j["datasets"] = datasets;
  if (timestamp) j["timestamp"] = *timestamp;
  return j;
}

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json path_json(const std::vector<Asn>& hops) {
  json arr = json::array();
  for (Asn a : hops) arr.push_back(a.value());
  return arr;
}

json to_json(const CoverageReport& report) {
  json j;
  j["mode"] = std::string(to_string(report.mode));
  j["count_source"] = report.count_source;
  j["selection_scope"] = report.selection_scope;
  j["total_paths"] = report.total_paths;
  json ranked = json::array();
  for (const auto& r : report.ranked) {
    ranked.push_back({{"as", r.asn.value()}, {"count", r.count}, {"fraction", round4(r.fraction)}});
  }
  j["ranked"] = std::move(ranked);
  json cumulative = json::array();
  for (const auto& p : report.cumulative) {
    cumulative.push_back(
        {{"k", p.k}, {"as", p.added.value()}, {"covered", p.covered}, {"fraction", round4(p.fraction)}});
  }
  j["cumulative"] = std::move(cumulative);
  return j;
}

json to_json(const CollateralReport& report) {
  auto bucket = [](const BucketCount& b) { return json{{"count", b.count}, {"fraction", round4(b.fraction)}}; };
  json censors = json::array();
  for (Asn a : report.censors) censors.push_back(a.value());
  return {
      {"home", report.home},
      {"censors", censors},
      {"total_paths", report.total_paths},
      {"intercepted", report.intercepted},
      {"home_origin", bucket(report.home_origin)},
      {"foreign_origin", bucket(report.foreign_origin)},
      {"unknown_origin", bucket(report.unknown_origin)},
      {"foreign_by_country", report.per_country},
  };
}

json to_json(const RouterSelection& s, bool hash_ids) {
  json selected = json::array();
  std::vector<std::string> ids;
  for (const auto& id : s.selected) ids.push_back(hash_ids ? hash_router_id(id) : id);
  std::sort(ids.begin(), ids.end());
  for (auto& id : ids) selected.push_back(std::move(id));
  return {
      {"as", s.as.value()},
      {"edge_routers", s.edge_count},
      {"core_routers", s.core_count},
      {"heavy_hitters", s.heavy_hitter_count},
      {"rule", std::string(to_string(s.rule))},
      {"required", s.selected.size()},
      {"paths", s.path_count},
      {"coverage_fraction", round4(s.coverage_fraction)},
      {"router_ids_hashed", hash_ids},
      {"selected", selected},
  };
}

namespace {

json counts_json(const CountryCounts& c) {
  return {{"home", c.home}, {"foreign", c.foreign}, {"unknown", c.unknown}, {"total", c.total()}};
}

}  // namespace

json to_json(const HijackOutcome& outcome) {
  json poisoned = json::array();
  for (const auto& [asn, route] : outcome.poisoned) {
    poisoned.push_back({{"as", asn.value()},
                        {"rule", static_cast<int>(route.rule)},
                        {"route_class", std::string(to_string(route.route_class))},
                        {"path", path_json(route.path)}});
  }
  return {
      {"attacker", outcome.attacker.value()},
      {"target", outcome.target.to_string()},
      {"claimed_path", path_json(outcome.claimed_path)},
      {"poisoned_count", outcome.poisoned.size()},
      {"counts", counts_json(outcome.counts)},
      {"poisoned", poisoned},
  };
}

json to_json(const AttackerSummary& s) {
  json affected = json::array();
  for (Asn a : s.affected) affected.push_back(a.value());
  return {
      {"attacker", s.attacker.value()},
      {"degree", s.degree},
      {"affected_count", s.affected.size()},
      {"counts", counts_json(s.counts)},
      {"per_target", s.per_target},
      {"affected", affected},
  };
}

json to_json(const ResolverTargetSet& targets) {
  json list = json::array();
  for (const auto& t : targets.targets) {
    list.push_back({{"as", t.as.value()}, {"prefix", t.prefix.to_string()}, {"resolvers", t.resolver_count}});
  }
  return {{"targets", list},
          {"chosen_resolvers", targets.chosen_resolvers},
          {"total_resolvers", targets.total_resolvers}};
}

json to_json(const DnsProbeResult& r) {
  json rtt = r.rtt_ms < 0 ? json(nullptr) : json(std::round(r.rtt_ms * 10) / 10);
  return {{"address", r.address},
          {"status", std::string(to_string(r.status))},
          {"rtt_ms", rtt},
          {"queries", r.queries_sent}};
}

json to_json(const UrlResult& r) {
  json j{{"category", r.category},
         {"url", r.url},
         {"status", std::string(to_string(r.status))},
         {"reason", r.reason},
         {"http_status", r.http_status},
         {"redirects", r.redirects},
         {"attempts", r.attempts}};
  if (!r.matched_signature.empty()) j["signature"] = r.matched_signature;
  return j;
}

json to_json(const ProbeSummary& summary) {
  json categories = json::object();
  for (const auto& [name, t] : summary.per_category) {
    categories[name] = {{"censored", t.censored}, {"open", t.open}, {"inaccessible", t.inaccessible},
                        {"total", t.total()}};
  }
  json results = json::array();
  for (const auto& r : summary.results) results.push_back(to_json(r));
  return {{"categories", categories},
          {"probed", summary.probed},
          {"partial", summary.partial},
          {"errors", summary.errors},
          {"results", results}};
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

void write_json_file(const std::filesystem::path& path, const json& doc) { write_text_file(path, doc.dump(2) + "\n"); }

}  // namespace chokemap
