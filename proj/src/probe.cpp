#include "chokemap/probe.hpp"

#include <netdb.h>
#include <sys/socket.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <istream>
#include <memory>
#include <mutex>
#include <ostream>
#include <thread>

#include <httplib.h>

#include "chokemap/error.hpp"
#include "line_reader.hpp"
#include "text_util.hpp"
#include "token_bucket.hpp"

namespace chokemap {

std::string_view to_string(UrlStatus status) {
  switch (status) {
    case UrlStatus::Censored: return "censored";
    case UrlStatus::Open: return "open";
    case UrlStatus::Inaccessible: return "inaccessible";
  }
  return "?";
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

[[noreturn]] void bad_url(std::string_view text, const std::string& why) {
  throw Error(ErrorKind::InvalidArgument, "invalid URL '" + std::string(text) + "': " + why);
}

std::uint16_t default_port(const std::string& scheme) { return scheme == "https" ? 443 : 80; }

}  // namespace

Url Url::parse(std::string_view text) {
  auto sep = text.find("://");
  if (sep == std::string_view::npos) bad_url(text, "missing scheme");
  Url u;
  u.scheme = lower(text.substr(0, sep));
  if (u.scheme != "http" && u.scheme != "https") bad_url(text, "scheme must be http or https");
  auto rest = text.substr(sep + 3);
  rest = rest.substr(0, rest.find('#'));
  auto end = rest.find_first_of("/?");
  auto authority = rest.substr(0, end);
  if (authority.find('@') != std::string_view::npos) bad_url(text, "credentials are not supported");
  std::string_view port_text;
  if (!authority.empty() && authority.front() == '[') {
    auto close = authority.find(']');
    if (close == std::string_view::npos) bad_url(text, "unterminated IPv6 literal");
    u.host = std::string(authority.substr(0, close + 1));
    auto tail = authority.substr(close + 1);
    if (!tail.empty()) {
      if (tail.front() != ':') bad_url(text, "junk after IPv6 literal");
      port_text = tail.substr(1);
    }
  } else {
    auto colon = authority.rfind(':');
    u.host = lower(authority.substr(0, colon));
    if (colon != std::string_view::npos) port_text = authority.substr(colon + 1);
    if (u.host.empty()) bad_url(text, "empty host");
    for (char c : u.host) {
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.' && c != '_') {
        bad_url(text, "bad character in host");
      }
    }
  }
  if (port_text.empty()) {
    u.port = default_port(u.scheme);
  } else {
    auto p = text::to_uint(port_text);
    if (!p || *p == 0 || *p > 65535) bad_url(text, "bad port");
    u.port = static_cast<std::uint16_t>(*p);
  }
  if (end != std::string_view::npos) {
    u.target = std::string(rest.substr(end));
    if (u.target.front() == '?') u.target.insert(u.target.begin(), '/');
  }
  return u;
}

Url Url::resolve(std::string_view location) const {
  location = text::trim(location);
  if (location.find("://") != std::string_view::npos) return parse(location);
  if (location.substr(0, 2) == "//") return parse(scheme + ":" + std::string(location));
  Url next = *this;
  location = location.substr(0, location.find('#'));
  if (location.empty()) return next;
  if (location.front() == '/') {
    next.target = std::string(location);
  } else if (location.front() == '?') {
    next.target = target.substr(0, target.find('?')) + std::string(location);
  } else {
    auto path = target.substr(0, target.find('?'));
    next.target = path.substr(0, path.rfind('/') + 1) + std::string(location);
  }
  return next;
}

std::string Url::origin() const { return scheme + "://" + host + ":" + std::to_string(port); }

std::string Url::to_string() const {
  std::string out = scheme + "://" + host;
  if (port != default_port(scheme)) out += ":" + std::to_string(port);
  return out + target;
}

std::vector<std::string> default_signatures() { return {"blocked as per the directions"}; }

std::vector<std::string> load_signatures(std::istream& in) {
  std::vector<std::string> out;
  text::for_each_line(in, [&](std::string_view line, std::size_t) { out.emplace_back(line); });
  return out;
}

namespace {

bool is_ip_literal(const std::string& host) {
  if (!host.empty() && host.front() == '[') return true;
  return std::all_of(host.begin(), host.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)) || c == '.'; });
}

bool resolves(const std::string& host) {
  if (is_ip_literal(host)) return true;
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &res);
  if (res) ::freeaddrinfo(res);
  return rc == 0;
}

std::string transport_reason(httplib::Error error, std::chrono::steady_clock::duration elapsed,
                             std::chrono::milliseconds timeout) {
  switch (error) {
    case httplib::Error::ConnectionTimeout: return "timeout";
    case httplib::Error::SSLConnection:
    case httplib::Error::SSLLoadingCerts:
    case httplib::Error::SSLServerVerification: return "tls";
    case httplib::Error::Connection: return "connect";
    case httplib::Error::Read:
    case httplib::Error::Write:
      // httplib reports a read timeout as a plain read error.
      return elapsed + std::chrono::milliseconds(50) >= timeout ? "timeout" : "transport";
    default: return "transport";
  }
}

bool is_transport_failure(const UrlResult& r) { return r.status == UrlStatus::Inaccessible && r.http_status == 0; }

// Index of the first signature in `lowered` that occurs in `haystack`.
std::optional<std::size_t> find_signature(const std::string& haystack, const std::vector<std::string>& lowered) {
  for (std::size_t i = 0; i < lowered.size(); ++i) {
    if (!lowered[i].empty() && haystack.find(lowered[i]) != std::string::npos) return i;
  }
  return std::nullopt;
}

UrlResult fetch_once(const Url& start, const std::vector<std::string>& signatures,
                     const std::vector<std::string>& lowered, const ProbeConfig& config) {
  UrlResult r;
  Url current = start;
  for (unsigned hop = 0;; ++hop) {
    if (!resolves(current.host)) {
      r.status = UrlStatus::Inaccessible;
      r.reason = "dns";
      r.http_status = 0;
      return r;
    }
    httplib::Client client(current.origin());
    client.set_connection_timeout(config.timeout);
    client.set_read_timeout(config.timeout);
    client.set_write_timeout(config.timeout);
    client.set_follow_location(false);
    client.enable_server_certificate_verification(config.verify_tls);
    const auto began = std::chrono::steady_clock::now();
    auto res = client.Get(current.target, httplib::Headers{{"User-Agent", config.user_agent}});
    if (!res) {
      r.status = UrlStatus::Inaccessible;
      r.reason = transport_reason(res.error(), std::chrono::steady_clock::now() - began, config.timeout);
      r.http_status = 0;
      return r;
    }
    r.http_status = res->status;
    std::string haystack;
    for (const auto& [name, value] : res->headers) haystack += name + ": " + value + "\n";
    haystack += res->body;
    haystack = lower(haystack);
    if (auto hit = find_signature(haystack, lowered)) {
      r.status = UrlStatus::Censored;
      r.reason = "signature";
      r.matched_signature = signatures[*hit];
      return r;
    }
    const int code = res->status;
    if (code >= 300 && code < 400) {
      auto location = res->get_header_value("Location");
      if (location.empty()) {
        r.status = UrlStatus::Open;
        r.reason = "redirect-end";
        return r;
      }
      if (hop >= config.max_redirects) {
        r.status = UrlStatus::Open;
        r.reason = "redirect-cap";
        return r;
      }
      try {
        current = current.resolve(location);
      } catch (const Error&) {
        r.status = UrlStatus::Open;
        r.reason = "redirect-end";
        return r;
      }
      ++r.redirects;
      continue;
    }
    if (code >= 200 && code < 300) {
      r.status = UrlStatus::Open;
      r.reason = "ok";
    } else {
      r.status = UrlStatus::Inaccessible;
      r.reason = code >= 500 ? "http-5xx" : code >= 400 ? "http-4xx" : "http-other";
    }
    return r;
  }
}

}  // namespace

UrlResult probe_url(const std::string& url, const std::vector<std::string>& signatures, const ProbeConfig& config) {
  if (signatures.empty()) throw Error(ErrorKind::Config, "block-page signature list is empty");
  const Url start = Url::parse(url);
  std::vector<std::string> lowered;
  for (const auto& s : signatures) lowered.push_back(lower(s));
  UrlResult r;
  for (unsigned attempt = 0; attempt <= config.retries; ++attempt) {
    r = fetch_once(start, signatures, lowered, config);
    r.attempts = attempt + 1;
    if (!is_transport_failure(r)) break;
  }
  r.url = url;
  return r;
}

UrlCorpus load_corpus(std::istream& in) {
  UrlCorpus corpus;
  text::for_each_line(in, [&](std::string_view line, std::size_t) {
    auto bar = line.find('|');
    if (bar == std::string_view::npos) throw ParseError(0, "expected <category>|<url>");
    auto category = std::string(text::trim(line.substr(0, bar)));
    auto url = text::trim(line.substr(bar + 1));
    if (category.empty()) throw ParseError(0, "empty category");
    corpus.categories.try_emplace(category, 0);
    if (url.empty()) return;
    Url::parse(url);
    corpus.entries.push_back({category, std::string(url)});
    ++corpus.categories[category];
  });
  return corpus;
}

ProbeSummary probe_corpus(const UrlCorpus& corpus, const std::vector<std::string>& signatures,
                          const ProbeConfig& config) {
  if (signatures.empty()) throw Error(ErrorKind::Config, "block-page signature list is empty");
  ProbeSummary summary;
  for (const auto& [name, n] : corpus.categories) summary.per_category[name];

  const std::size_t n = corpus.entries.size();
  std::vector<std::optional<UrlResult>> slots(n);
  std::vector<std::string> failures(n);

  std::map<std::string, std::unique_ptr<std::mutex>> host_locks;
  std::vector<std::mutex*> lock_of(n, nullptr);
  for (std::size_t i = 0; i < n; ++i) {
    std::string host;
    try {
      host = Url::parse(corpus.entries[i].url).host;
    } catch (const Error&) {
      continue;  // reported when probed
    }
    auto& m = host_locks[host];
    if (!m) m = std::make_unique<std::mutex>();
    lock_of[i] = m.get();
  }

  TokenBucket bucket(config.rate_per_sec, std::max(1.0, config.rate_per_sec));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next++) < n;) {
      const auto& entry = corpus.entries[i];
      try {
        std::unique_lock<std::mutex> host_guard;
        if (lock_of[i]) host_guard = std::unique_lock(*lock_of[i]);
        bucket.acquire();
        slots[i] = probe_url(entry.url, signatures, config);
        slots[i]->category = entry.category;
      } catch (const std::exception& e) {
        failures[i] = entry.url + ": " + e.what();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(config.max_concurrency, static_cast<unsigned>(n)));
  std::vector<std::thread> workers;
  for (unsigned j = 0; j < threads; ++j) workers.emplace_back(work);
  for (auto& w : workers) w.join();

  for (std::size_t i = 0; i < n; ++i) {
    if (!slots[i]) {
      summary.partial = true;
      summary.errors.push_back(failures[i]);
      continue;
    }
    auto& tally = summary.per_category[slots[i]->category];
    switch (slots[i]->status) {
      case UrlStatus::Censored: ++tally.censored; break;
      case UrlStatus::Open: ++tally.open; break;
      case UrlStatus::Inaccessible: ++tally.inaccessible; break;
    }
    ++summary.probed;
    summary.results.push_back(std::move(*slots[i]));
  }
  return summary;
}

void write_summary_csv(std::ostream& out, const ProbeSummary& summary) {
  out << "category,censored,open,inaccessible,total\n";
  for (const auto& [name, t] : summary.per_category) {
    out << name << ',' << t.censored << ',' << t.open << ',' << t.inaccessible << ',' << t.total() << '\n';
  }
}

void write_url_results(std::ostream& out, const std::vector<UrlResult>& results) {
  for (const auto& r : results) {
    out << r.category << '|' << r.url << '|' << to_string(r.status) << '|' << r.reason << '|' << r.http_status << '\n';
  }
}

}  // namespace chokemap
