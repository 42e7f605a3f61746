#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "chokemap/pathinfer.hpp"

namespace chokemap {

enum class CoverageMode { Rank, Greedy };

std::string_view to_string(CoverageMode mode);
CoverageMode parse_coverage_mode(std::string_view text);

/// Country filters. Empty sets mean "no filter"; any non-empty filter needs
/// country tags in the graph.
struct CoverageScope {
  std::set<std::string> interceptor_countries;  // which ASes may intercept
  std::set<std::string> source_countries;       // which paths are counted

  bool empty() const { return interceptor_countries.empty() && source_countries.empty(); }
  std::string describe() const;
};

struct CoverageOptions {
  CoverageMode mode = CoverageMode::Rank;
  CoverageScope scope;
  /// The source AS of a path counts as one of its interceptors.
  bool count_source = true;
};

struct RankedAs {
  Asn asn;
  std::size_t count = 0;
  double fraction = 0.0;

  bool operator==(const RankedAs&) const = default;
};

struct CumulativePoint {
  std::size_t k = 0;
  Asn added;
  std::size_t covered = 0;
  double fraction = 0.0;

  bool operator==(const CumulativePoint&) const = default;
};

struct CoverageReport {
  CoverageMode mode = CoverageMode::Rank;
  bool count_source = true;
  std::string selection_scope;
  std::size_t total_paths = 0;
  /// Descending count, ties by ascending ASN, independent of mode.
  std::vector<RankedAs> ranked;
  /// cumulative[k-1]: paths covered by the first k ASes of the mode's order.
  std::vector<CumulativePoint> cumulative;

  bool operator==(const CoverageReport&) const = default;
};

/// ASes that can intercept `path`: the source (if `count_source`) and every
/// intermediate hop. The terminal origin is excluded unless it is also the
/// source.
std::vector<Asn> interceptors_of(const std::vector<Asn>& path, bool count_source);

/// Counts, for every in-scope AS, the paths it intercepts, and builds the
/// cumulative union-coverage curve. Rank mode accumulates in ranked order;
/// greedy mode picks the largest marginal gain next (ties in ranked order).
/// Throws MissingCountryData if a country filter is set but the graph has
/// no tags.
CoverageReport rank_interceptors(const RoutingTable& table, const AsGraph& graph, const CoverageOptions& options = {});

/// Shortest prefix of the report's order whose coverage reaches `threshold`.
/// Throws InvalidArgument outside (0, 1] and Unreachable if the whole curve
/// stays below.
std::vector<Asn> select_key_ases(const CoverageReport& report, double threshold);

struct BucketCount {
  std::size_t count = 0;
  double fraction = 0.0;  // of all counted paths

  bool operator==(const BucketCount&) const = default;
};

struct CollateralReport {
  std::string home;
  std::set<Asn> censors;
  std::size_t total_paths = 0;
  std::size_t intercepted = 0;
  BucketCount home_origin;
  BucketCount foreign_origin;
  BucketCount unknown_origin;
  /// Intercepted foreign-origin paths by source country.
  std::map<std::string, std::size_t> per_country;

  bool operator==(const CollateralReport&) const = default;
};

/// Partitions the paths intercepted by `censors` by the source AS's country.
/// Untagged sources land in the unknown bucket.
CollateralReport collateral_damage(const RoutingTable& table, const std::set<Asn>& censors, const std::string& home,
                                   const AsGraph& graph, bool count_source = true);

/// `k,as,covered,cumulative_fraction` rows, fractions to four decimals.
void write_coverage_csv(std::ostream& out, const CoverageReport& report);

}  // namespace chokemap
