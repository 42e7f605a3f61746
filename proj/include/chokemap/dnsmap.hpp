#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "chokemap/chokepoint.hpp"
#include "chokemap/ingest.hpp"

namespace chokemap {

struct ResolverTarget {
  Asn as;
  Prefix prefix;
  std::uint64_t resolver_count = 0;

  bool operator==(const ResolverTarget&) const = default;
};

struct ResolverTargetSet {
  std::vector<ResolverTarget> targets;  // one per AS, ascending ASN
  std::uint64_t chosen_resolvers = 0;   // resolvers inside the chosen prefixes
  std::uint64_t total_resolvers = 0;    // whole inventory

  std::vector<Prefix> prefixes() const;
  bool operator==(const ResolverTargetSet&) const = default;
};

/// One prefix per AS: the one with most resolvers, ties to the numerically
/// lowest prefix. Throws InvalidArgument on an empty inventory.
ResolverTargetSet select_resolver_targets(const ResolverInventory& inventory);

/// Routes from every AS to the chosen resolver prefixes, ranked exactly like
/// rank_interceptors. The prefixes must be registered as origins.
CoverageReport dns_coverage(const AsGraph& graph, std::span<const AsPath> known, const ResolverTargetSet& targets,
                            const CoverageOptions& options = {}, const InferenceOptions& inference = {});

// --- active verification -------------------------------------------------

enum class ResolverStatus { Open, Filtered, Closed, NonResolving };

std::string_view to_string(ResolverStatus status);

struct DnsProbeConfig {
  std::chrono::milliseconds timeout{2000};
  std::string test_name = "www.example.com";
  std::uint16_t port = 53;
  unsigned max_concurrency = 16;
  double rate_per_sec = 20.0;
  /// Upper bound on queries per target: the probe plus one resolution check.
  unsigned max_queries = 2;
};

struct DnsProbeResult {
  std::string address;
  ResolverStatus status = ResolverStatus::Filtered;
  double rtt_ms = -1.0;  // of the deciding response; -1 when none came back
  unsigned queries_sent = 0;

  bool operator==(const DnsProbeResult&) const = default;
};

/// Sends a recursive A query for `test_name` over UDP. An A answer is Open,
/// a reply without one is NonResolving, ICMP port-unreachable is Closed and
/// silence is Filtered; silence on the first query earns one resolution
/// check. Throws LocalNetwork when the failure is on this host's side.
DnsProbeResult probe_resolver(const std::string& address, const DnsProbeConfig& config = {});

/// Probes an explicit list with bounded concurrency and a shared token
/// bucket. Results follow input order.
std::vector<DnsProbeResult> probe_resolvers(const std::vector<std::string>& addresses, const DnsProbeConfig& config = {});

/// One IPv4 address per line.
std::vector<std::string> load_probe_targets(std::istream& in);
/// `<ip>|<classification>|<rtt_ms>`; rtt is `-` when no reply arrived.
void write_probe_results(std::ostream& out, const std::vector<DnsProbeResult>& results);

/// DNS wire helpers, exposed for stub servers in tests.
namespace dnswire {

std::vector<std::uint8_t> build_query(std::uint16_t id, const std::string& name);

struct Reply {
  std::uint16_t id = 0;
  bool is_response = false;
  int rcode = 0;
  std::size_t a_records = 0;
};

/// Throws Parse on truncated or malformed messages.
Reply parse_reply(const std::uint8_t* data, std::size_t size);

}  // namespace dnswire

}  // namespace chokemap
