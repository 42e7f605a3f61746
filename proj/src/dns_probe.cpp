#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <istream>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "chokemap/dnsmap.hpp"
#include "chokemap/error.hpp"
#include "line_reader.hpp"
#include "token_bucket.hpp"

namespace chokemap {

std::string_view to_string(ResolverStatus status) {
  switch (status) {
    case ResolverStatus::Open: return "open";
    case ResolverStatus::Filtered: return "filtered";
    case ResolverStatus::Closed: return "closed";
    case ResolverStatus::NonResolving: return "non-resolving";
  }
  return "?";
}

namespace dnswire {

std::vector<std::uint8_t> build_query(std::uint16_t id, const std::string& name) {
  std::vector<std::uint8_t> q{static_cast<std::uint8_t>(id >> 8), static_cast<std::uint8_t>(id & 0xff),
                              0x01, 0x00,  // RD
                              0x00, 0x01,  // QDCOUNT
                              0x00, 0x00, 0x00, 0x00, 0x00, 0x00};
  std::size_t start = 0;
  while (start <= name.size()) {
    auto dot = name.find('.', start);
    if (dot == std::string::npos) dot = name.size();
    auto label = name.substr(start, dot - start);
    if (label.size() > 63) throw Error(ErrorKind::InvalidArgument, "DNS label too long in '" + name + "'");
    if (!label.empty()) {
      q.push_back(static_cast<std::uint8_t>(label.size()));
      q.insert(q.end(), label.begin(), label.end());
    }
    start = dot + 1;
  }
  q.push_back(0);
  q.insert(q.end(), {0x00, 0x01, 0x00, 0x01});  // A, IN
  return q;
}

namespace {

struct Cursor {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > size) throw Error(ErrorKind::Parse, "truncated DNS message");
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(data[pos] << 8 | data[pos + 1]);
    pos += 2;
    return v;
  }
  void skip(std::size_t n) {
    need(n);
    pos += n;
  }
  void skip_name() {
    for (int guard = 0; guard < 128; ++guard) {
      need(1);
      std::uint8_t len = data[pos];
      if ((len & 0xc0) == 0xc0) {
        skip(2);
        return;
      }
      ++pos;
      if (len == 0) return;
      skip(len);
    }
    throw Error(ErrorKind::Parse, "DNS name too long");
  }
};

}  // namespace

Reply parse_reply(const std::uint8_t* data, std::size_t size) {
  Cursor c{data, size};
  Reply r;
  r.id = c.u16();
  std::uint16_t flags = c.u16();
  r.is_response = flags & 0x8000;
  r.rcode = flags & 0x000f;
  std::uint16_t qd = c.u16();
  std::uint16_t an = c.u16();
  c.skip(4);
  for (int i = 0; i < qd; ++i) {
    c.skip_name();
    c.skip(4);
  }
  for (int i = 0; i < an; ++i) {
    c.skip_name();
    std::uint16_t type = c.u16();
    c.skip(6);  // class, ttl
    std::uint16_t rdlen = c.u16();
    c.skip(rdlen);
    if (type == 1 && rdlen == 4) ++r.a_records;
  }
  return r;
}

}  // namespace dnswire

namespace {

enum class Outcome { Answer, NoAnswer, Refused, Silence };

struct Attempt {
  Outcome outcome;
  double rtt_ms;
};

[[noreturn]] void local_failure(const std::string& what) {
  throw Error(ErrorKind::LocalNetwork, what + ": " + std::strerror(errno));
}

bool local_errno(int e) {
  return e == ENETUNREACH || e == ENETDOWN || e == ENOBUFS || e == ENOMEM || e == EMFILE || e == ENFILE ||
         e == EACCES || e == EPERM || e == EADDRNOTAVAIL;
}

class UdpSocket {
 public:
  UdpSocket() : fd_(::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0)) {
    if (fd_ < 0) local_failure("socket");
  }
  ~UdpSocket() { ::close(fd_); }
  UdpSocket(const UdpSocket&) = delete;
  UdpSocket& operator=(const UdpSocket&) = delete;
  int fd() const { return fd_; }

 private:
  int fd_;
};

// One query on a fresh connected socket, so an ICMP port-unreachable comes
// back as ECONNREFUSED.
Attempt query_once(const sockaddr_in& addr, const std::string& name, std::chrono::milliseconds timeout) {
  static std::atomic<std::uint32_t> counter{std::random_device{}()};
  const auto id = static_cast<std::uint16_t>(counter.fetch_add(0x9e37));
  UdpSocket sock;
  if (::connect(sock.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    if (local_errno(errno)) local_failure("connect");
    return {Outcome::Silence, -1.0};
  }
  auto query = dnswire::build_query(id, name);
  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };
  if (::send(sock.fd(), query.data(), query.size(), 0) < 0) {
    if (errno == ECONNREFUSED) return {Outcome::Refused, elapsed_ms()};
    if (local_errno(errno)) local_failure("send");
    return {Outcome::Silence, -1.0};
  }
  const auto deadline = start + timeout;
  std::uint8_t buf[4096];
  while (true) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return {Outcome::Silence, -1.0};
    pollfd pfd{sock.fd(), POLLIN, 0};
    int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      local_failure("poll");
    }
    if (ready == 0) return {Outcome::Silence, -1.0};
    ssize_t n = ::recv(sock.fd(), buf, sizeof buf, 0);
    if (n < 0) {
      if (errno == ECONNREFUSED) return {Outcome::Refused, elapsed_ms()};
      if (errno == EINTR || errno == EAGAIN) continue;
      if (errno == EHOSTUNREACH || errno == ENETUNREACH) return {Outcome::Silence, -1.0};
      local_failure("recv");
    }
    try {
      auto reply = dnswire::parse_reply(buf, static_cast<std::size_t>(n));
      if (!reply.is_response || reply.id != id) continue;  // stray datagram
      bool answered = reply.rcode == 0 && reply.a_records > 0;
      return {answered ? Outcome::Answer : Outcome::NoAnswer, elapsed_ms()};
    } catch (const Error&) {
      return {Outcome::NoAnswer, elapsed_ms()};
    }
  }
}

}  // namespace

DnsProbeResult probe_resolver(const std::string& address, const DnsProbeConfig& config) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(config.port);
  addr.sin_addr.s_addr = htonl(parse_ipv4(address));
  if (config.max_queries == 0) throw Error(ErrorKind::Config, "max_queries must be at least 1");

  DnsProbeResult result{format_ipv4(parse_ipv4(address)), ResolverStatus::Filtered, -1.0, 0};
  for (unsigned q = 0; q < config.max_queries; ++q) {
    auto attempt = query_once(addr, config.test_name, config.timeout);
    ++result.queries_sent;
    result.rtt_ms = attempt.rtt_ms;
    switch (attempt.outcome) {
      case Outcome::Answer:
        result.status = ResolverStatus::Open;
        return result;
      case Outcome::NoAnswer:
        result.status = ResolverStatus::NonResolving;
        return result;
      case Outcome::Refused:
        result.status = ResolverStatus::Closed;
        return result;
      case Outcome::Silence:
        // Filtered so far; the next round is the resolution check.
        result.status = ResolverStatus::Filtered;
        break;
    }
  }
  return result;
}

std::vector<DnsProbeResult> probe_resolvers(const std::vector<std::string>& addresses, const DnsProbeConfig& config) {
  std::vector<DnsProbeResult> out(addresses.size());
  // Validate everything before sending anything.
  for (const auto& a : addresses) parse_ipv4(a);
  TokenBucket bucket(config.rate_per_sec, std::max(1.0, config.rate_per_sec));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto work = [&] {
    for (std::size_t i; (i = next++) < addresses.size();) {
      try {
        bucket.acquire();
        out[i] = probe_resolver(addresses[i], config);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = addresses.size();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(config.max_concurrency, static_cast<unsigned>(addresses.size())));
  std::vector<std::thread> workers;
  for (unsigned j = 0; j < n; ++j) workers.emplace_back(work);
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<std::string> load_probe_targets(std::istream& in) {
  std::vector<std::string> out;
  text::for_each_line(in, [&](std::string_view line, std::size_t) { out.push_back(format_ipv4(parse_ipv4(line))); });
  return out;
}

void write_probe_results(std::ostream& out, const std::vector<DnsProbeResult>& results) {
  for (const auto& r : results) {
    out << r.address << '|' << to_string(r.status) << '|';
    if (r.rtt_ms < 0) {
      out << '-';
    } else {
      out << fmt::format("{:.1f}", r.rtt_ms);
    }
    out << '\n';
  }
}

}  // namespace chokemap
