#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace chokemap {

enum class UrlStatus { Censored, Open, Inaccessible };

std::string_view to_string(UrlStatus status);

/// Parsed http(s) URL. Only what the prober needs.
struct Url {
  std::string scheme;  // "http" or "https"
  std::string host;
  std::uint16_t port = 0;
  std::string target = "/";  // path plus query

  /// Throws InvalidArgument on anything that is not an absolute http(s) URL.
  static Url parse(std::string_view text);
  /// Resolves a Location header value against this URL.
  Url resolve(std::string_view location) const;
  std::string origin() const;  // scheme://host:port
  std::string to_string() const;
};

struct ProbeConfig {
  std::chrono::milliseconds timeout{5000};
  unsigned max_redirects = 5;
  /// Extra attempts after a transport failure. HTTP answers are never retried.
  unsigned retries = 0;
  std::string user_agent = "chokemap-probe/0.1";
  unsigned max_concurrency = 8;
  double rate_per_sec = 5.0;
  bool verify_tls = true;
};

struct UrlResult {
  std::string category;
  std::string url;
  UrlStatus status = UrlStatus::Inaccessible;
  /// Why: "signature", "ok", "redirect-cap", "redirect-end", "http-4xx", "http-5xx",
  /// "http-other", "dns", "connect", "timeout", "tls", "transport".
  std::string reason;
  int http_status = 0;  // last response seen, 0 when none
  unsigned redirects = 0;
  unsigned attempts = 0;
  std::string matched_signature;

  bool operator==(const UrlResult&) const = default;
};

/// The block-page wording used as the default signature.
std::vector<std::string> default_signatures();

/// One pattern per line; blank and `#` lines skipped.
std::vector<std::string> load_signatures(std::istream& in);

/// Fetches `url`, following up to `max_redirects` redirects by hand. A
/// signature found (case-insensitively) in the headers or body of any
/// response along the chain is Censored. Otherwise a 2xx, or a 3xx that ends
/// the chain, is Open; 4xx, 5xx and every transport failure are
/// Inaccessible. Throws Config on an empty signature list.
UrlResult probe_url(const std::string& url, const std::vector<std::string>& signatures, const ProbeConfig& config = {});

struct CorpusEntry {
  std::string category;
  std::string url;

  bool operator==(const CorpusEntry&) const = default;
};

struct UrlCorpus {
  std::vector<CorpusEntry> entries;
  /// Category -> number of URLs. A `<category>|` line declares a category
  /// with no URLs.
  std::map<std::string, std::size_t> categories;
};

/// `<category>|<url>` per line. URLs are validated on load.
UrlCorpus load_corpus(std::istream& in);

struct CategoryTally {
  std::size_t censored = 0;
  std::size_t open = 0;
  std::size_t inaccessible = 0;

  std::size_t total() const { return censored + open + inaccessible; }
  bool operator==(const CategoryTally&) const = default;
};

struct ProbeSummary {
  std::map<std::string, CategoryTally> per_category;  // every corpus category
  std::vector<UrlResult> results;                     // corpus order, probed entries only
  std::size_t probed = 0;
  /// Set when some entries could not be probed; they are listed in `errors`
  /// and left out of the tallies.
  bool partial = false;
  std::vector<std::string> errors;
};

/// Probes each entry once (plus retries) with bounded concurrency, one
/// request at a time per host and a global rate limit.
ProbeSummary probe_corpus(const UrlCorpus& corpus, const std::vector<std::string>& signatures,
                          const ProbeConfig& config = {});

/// `category,censored,open,inaccessible,total`, one row per category.
void write_summary_csv(std::ostream& out, const ProbeSummary& summary);
/// `<category>|<url>|<status>|<reason>|<http_status>`
void write_url_results(std::ostream& out, const std::vector<UrlResult>& results);

}  // namespace chokemap
