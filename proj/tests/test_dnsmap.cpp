#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <random>
#include <sstream>
#include <thread>

#include "chokemap/dnsmap.hpp"
#include "chokemap/synth.hpp"
#include "test_support.hpp"

using namespace chokemap;
using testing::as;

namespace {

Prefix pfx(const char* text) { return Prefix::parse(text); }

// Crafted 50-AS inventory. AS i has four prefixes 20.i.k.0/24; the winner
// sits at k = i % 4. Every third AS gets a tie between the winner and a
// higher-numbered prefix; every fifth AS gets a tie with a lower-numbered
// one, which then wins.
struct CraftedInventory {
  ResolverInventory inventory;
  std::map<Asn, Prefix> expected;
  std::uint64_t total = 0;
};

CraftedInventory crafted_inventory() {
  CraftedInventory c;
  for (std::uint32_t i = 1; i <= 50; ++i) {
    auto prefix = [&](std::uint32_t k) { return Prefix((20u << 24) | (i << 16) | (k << 8), 24); };
    std::uint32_t w = i % 4;
    std::map<Prefix, std::uint64_t> counts;
    for (std::uint32_t k = 0; k < 4; ++k) counts[prefix(k)] = 1 + k + i % 7;  // all below 40
    counts[prefix(w)] = 40 + i;
    std::uint32_t winner = w;
    if (i % 3 == 0 && w < 3) counts[prefix(w + 1)] = 40 + i;
    if (i % 5 == 0 && w > 0) {
      counts[prefix(w - 1)] = 40 + i;
      winner = w - 1;
    }
    for (auto& [p, n] : counts) c.total += n;
    c.inventory[as(i)] = counts;
    c.expected[as(i)] = prefix(winner);
  }
  return c;
}

// UDP stub resolver on 127.0.0.1 with a fixed behaviour.
class StubResolver {
 public:
  enum class Mode { Answer, Refuse, Drop };

  explicit StubResolver(Mode mode) : mode_(mode) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    REQUIRE(fd_ >= 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    REQUIRE(::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    thread_ = std::thread([this] { serve(); });
  }
  ~StubResolver() {
    stop_ = true;
    thread_.join();
    ::close(fd_);
  }

  std::uint16_t port() const { return port_; }
  int queries() const { return queries_; }

 private:
  void serve() {
    std::uint8_t buf[1500];
    while (!stop_) {
      pollfd pfd{fd_, POLLIN, 0};
      if (::poll(&pfd, 1, 20) <= 0) continue;
      sockaddr_in peer{};
      socklen_t len = sizeof peer;
      ssize_t n = ::recvfrom(fd_, buf, sizeof buf, 0, reinterpret_cast<sockaddr*>(&peer), &len);
      if (n < 12) continue;
      ++queries_;
      if (mode_ == Mode::Drop) continue;
      std::vector<std::uint8_t> reply(buf, buf + n);
      reply[2] = 0x81;
      if (mode_ == Mode::Answer) {
        reply[3] = 0x80;
        reply[7] = 1;  // ANCOUNT
        reply.insert(reply.end(), {0xc0, 0x0c, 0x00, 0x01, 0x00, 0x01, 0x00, 0x00, 0x01, 0x2c, 0x00, 0x04, 93, 184, 216, 34});
      } else {
        reply[3] = 0x85;  // REFUSED
      }
      ::sendto(fd_, reply.data(), reply.size(), 0, reinterpret_cast<sockaddr*>(&peer), len);
    }
  }

  Mode mode_;
  int fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stop_{false};
  std::atomic<int> queries_{0};
  std::thread thread_;
};

std::uint16_t unused_udp_port() {
  int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

DnsProbeConfig loopback_config(std::uint16_t port) {
  DnsProbeConfig c;
  c.port = port;
  c.timeout = std::chrono::milliseconds(200);
  c.rate_per_sec = 0;
  return c;
}

}  // namespace

TEST_CASE("resolver targets: max count wins, ties go to the lower prefix") {
  ResolverInventory inv;
  inv[as(1)] = {{pfx("1.0.0.0/24"), 10}, {pfx("1.0.1.0/24"), 17}};
  inv[as(2)] = {{pfx("2.0.1.0/24"), 5}, {pfx("2.0.0.0/24"), 5}};
  inv[as(3)] = {{pfx("3.0.0.0/24"), 1}};
  auto set = select_resolver_targets(inv);
  REQUIRE(set.targets.size() == 3);
  CHECK(set.targets[0] == ResolverTarget{as(1), pfx("1.0.1.0/24"), 17});
  CHECK(set.targets[1] == ResolverTarget{as(2), pfx("2.0.0.0/24"), 5});
  CHECK(set.targets[2] == ResolverTarget{as(3), pfx("3.0.0.0/24"), 1});
  CHECK(set.chosen_resolvers == 23);
  CHECK(set.total_resolvers == 38);
  CHECK(testing::error_kind_of([] { select_resolver_targets({}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("resolver targets: crafted 50-AS inventory, shuffled input") {
  auto crafted = crafted_inventory();
  auto set = select_resolver_targets(crafted.inventory);
  REQUIRE(set.targets.size() == 50);
  for (const auto& t : set.targets) CHECK(t.prefix == crafted.expected.at(t.as));
  CHECK(set.total_resolvers == crafted.total);

  // Rebuild the inventory from shuffled lines; the selection must not move.
  std::vector<std::string> lines;
  for (const auto& [asn, prefixes] : crafted.inventory) {
    for (const auto& [p, n] : prefixes) lines.push_back(p.to_string() + "|" + to_string(asn) + "|" + std::to_string(n));
  }
  std::mt19937_64 rng(99);
  for (int round = 0; round < 5; ++round) {
    std::shuffle(lines.begin(), lines.end(), rng);
    std::stringstream text;
    for (const auto& l : lines) text << l << '\n';
    auto again = select_resolver_targets(load_resolver_inventory(text));
    CHECK(again == set);
  }

  // Idempotent: selecting from the selection changes nothing.
  ResolverInventory chosen;
  for (const auto& t : set.targets) chosen[t.as][t.prefix] = t.resolver_count;
  auto twice = select_resolver_targets(chosen);
  CHECK(twice.targets == set.targets);
}

TEST_CASE("dns coverage: single AS is its own resolver target") {
  AsGraphBuilder b;
  b.add_origin(pfx("100.0.0.0/24"), as(7));
  auto g = b.build();
  ResolverInventory inv{{as(7), {{pfx("100.0.0.0/24"), 3}}}};
  auto report = dns_coverage(g, {}, select_resolver_targets(inv));
  CHECK(report.total_paths == 1);
  REQUIRE(report.cumulative.size() == 1);
  CHECK(report.cumulative[0].k == 1);
  CHECK(report.cumulative[0].fraction == 1.0);
}

TEST_CASE("dns coverage: two transits carry every client path") {
  // 1-2 peer transits; 3,4,5 under 1 and 6,7,8 under 2. Resolvers sit in 3
  // and 6 (PK); clients 4,5,7,8 (BD) are the sources; transits are IN.
  AsGraphBuilder b;
  testing::add_edges(b, {"1-2", "1>3", "1>4", "1>5", "2>6", "2>7", "2>8"});
  for (auto a : {1, 2}) b.set_country(as(a), "IN");
  for (auto a : {3, 6}) b.set_country(as(a), "PK");
  for (auto a : {4, 5, 7, 8}) b.set_country(as(a), "BD");
  b.add_origin(pfx("100.0.0.0/24"), as(3));
  b.add_origin(pfx("100.0.6.0/24"), as(6));
  auto g = b.build();
  ResolverInventory inv{{as(3), {{pfx("100.0.0.0/24"), 5}}}, {as(6), {{pfx("100.0.6.0/24"), 9}}}};
  auto targets = select_resolver_targets(inv);

  // Oracle: every enumerated client route has 1 or 2 as an intermediate hop.
  std::size_t client_paths = 0;
  for (const auto& p : targets.prefixes()) {
    for (const auto& [src, route] : oracle_routes(g, p)) {
      if (g.country(src) != std::optional<std::string_view>("BD")) continue;
      ++client_paths;
      const auto& h = route.path.hops;
      CHECK(std::any_of(h.begin() + 1, h.end() - 1, [](Asn a) { return a == as(1) || a == as(2); }));
    }
  }
  CHECK(client_paths == 8);

  CoverageOptions opt;
  opt.count_source = false;
  opt.scope.source_countries = {"BD"};
  opt.scope.interceptor_countries = {"IN"};
  auto report = dns_coverage(g, {}, targets, opt);
  CHECK(report.total_paths == client_paths);
  REQUIRE(report.cumulative.size() == 2);
  CHECK(report.cumulative[0].fraction == doctest::Approx(0.75));
  CHECK(report.cumulative[1].fraction == 1.0);
}

TEST_CASE("dns coverage matches chokepoint coverage on the same targets") {
  for (std::uint64_t seed : {1, 2, 3}) {
    synth::SynthSpec spec;
    spec.seed = seed;
    spec.n_stub = 120;
    spec.n_regional = 20;
    spec.n_transit = 4;
    auto bundle = synth::generate(spec);
    auto targets = select_resolver_targets(bundle.resolver_inventory);
    for (auto mode : {CoverageMode::Rank, CoverageMode::Greedy}) {
      CoverageOptions opt;
      opt.mode = mode;
      auto prefixes = targets.prefixes();
      auto direct = rank_interceptors(infer_routes(bundle.graph, bundle.known_paths, prefixes), bundle.graph, opt);
      CHECK(dns_coverage(bundle.graph, bundle.known_paths, targets, opt) == direct);
    }
  }
}

TEST_CASE("dns wire: query layout and reply parsing") {
  auto q = dnswire::build_query(0x1234, "www.example.com");
  CHECK(q.size() == 12 + 17 + 4);
  CHECK(q[0] == 0x12);
  CHECK(q[1] == 0x34);
  CHECK(q[12] == 3);
  auto parsed = dnswire::parse_reply(q.data(), q.size());
  CHECK(parsed.id == 0x1234);
  CHECK_FALSE(parsed.is_response);
  CHECK(parsed.a_records == 0);
  CHECK(testing::error_kind_of([&] { dnswire::parse_reply(q.data(), 20); }) == ErrorKind::Parse);
  CHECK(testing::error_kind_of([] { dnswire::build_query(1, std::string(64, 'a') + ".com"); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("dns probe against loopback stubs") {
  SUBCASE("answering stub is open") {
    StubResolver stub(StubResolver::Mode::Answer);
    auto r = probe_resolver("127.0.0.1", loopback_config(stub.port()));
    CHECK(r.status == ResolverStatus::Open);
    CHECK(r.queries_sent == 1);
    CHECK(r.rtt_ms >= 0);
  }
  SUBCASE("refusing stub is non-resolving") {
    StubResolver stub(StubResolver::Mode::Refuse);
    auto r = probe_resolver("127.0.0.1", loopback_config(stub.port()));
    CHECK(r.status == ResolverStatus::NonResolving);
    CHECK(r.queries_sent == 1);
  }
  SUBCASE("silent stub is filtered after the resolution check") {
    StubResolver stub(StubResolver::Mode::Drop);
    auto r = probe_resolver("127.0.0.1", loopback_config(stub.port()));
    CHECK(r.status == ResolverStatus::Filtered);
    CHECK(r.queries_sent == 2);
    CHECK(r.rtt_ms < 0);
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    CHECK(stub.queries() == 2);
  }
  SUBCASE("closed port is closed") {
    auto r = probe_resolver("127.0.0.1", loopback_config(unused_udp_port()));
    CHECK(r.status == ResolverStatus::Closed);
    CHECK(r.queries_sent == 1);
  }
  SUBCASE("query budget of one") {
    StubResolver stub(StubResolver::Mode::Drop);
    auto cfg = loopback_config(stub.port());
    cfg.max_queries = 1;
    auto r = probe_resolver("127.0.0.1", cfg);
    CHECK(r.status == ResolverStatus::Filtered);
    CHECK(r.queries_sent == 1);
  }
  SUBCASE("bad address") {
    CHECK(testing::error_kind_of([] { probe_resolver("300.1.1.1"); }) == ErrorKind::Parse);
  }
}

TEST_CASE("dns probe list keeps input order and the per-target budget") {
  StubResolver stub(StubResolver::Mode::Drop);
  auto cfg = loopback_config(stub.port());
  cfg.max_concurrency = 3;
  cfg.rate_per_sec = 200;
  std::vector<std::string> targets{"127.0.0.1", "127.0.0.2", "127.0.0.1", "127.0.0.1"};
  auto results = probe_resolvers(targets, cfg);
  REQUIRE(results.size() == 4);
  CHECK(results[1].address == "127.0.0.2");
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  // 127.0.0.2 reaches no listener (the stub is bound to .1), so only .1 probes land.
  CHECK(stub.queries() <= 3 * 2);
  for (const auto& r : results) CHECK(r.queries_sent <= 2);

  std::stringstream out;
  write_probe_results(out, {{"1.2.3.4", ResolverStatus::Open, 12.34, 1}, {"5.6.7.8", ResolverStatus::Filtered, -1, 2}});
  CHECK(out.str() == "1.2.3.4|open|12.3\n5.6.7.8|filtered|-\n");

  std::stringstream in("# resolvers\n8.8.8.8\n\n 1.1.1.1 \n");
  CHECK(load_probe_targets(in) == std::vector<std::string>{"8.8.8.8", "1.1.1.1"});
  std::stringstream bad("8.8.8\n");
  CHECK(testing::error_kind_of([&] { load_probe_targets(bad); }) == ErrorKind::Parse);
}
