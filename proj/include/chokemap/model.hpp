#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace chokemap {

/// Autonomous-system number. Zero is reserved and never a valid node.
class Asn {
 public:
  constexpr Asn() = default;
  explicit Asn(std::uint64_t value);

  constexpr std::uint32_t value() const noexcept { return value_; }
  constexpr auto operator<=>(const Asn&) const = default;

 private:
  std::uint32_t value_ = 0;
};

Asn parse_asn(std::string_view text);
std::string to_string(Asn asn);

/// Dotted-quad IPv4 helpers.
std::uint32_t parse_ipv4(std::string_view text);
std::string format_ipv4(std::uint32_t address);
bool looks_like_ipv6(std::string_view text);

/// IPv4 prefix with zero host bits.
class Prefix {
 public:
  constexpr Prefix() = default;
  Prefix(std::uint32_t network, int length);

  static Prefix parse(std::string_view text);

  std::uint32_t network() const noexcept { return network_; }
  int length() const noexcept { return length_; }
  bool contains(std::uint32_t address) const noexcept;
  std::string to_string() const;

  auto operator<=>(const Prefix&) const = default;

 private:
  std::uint32_t network_ = 0;
  std::uint8_t length_ = 0;
};

enum class Relationship : std::uint8_t { ProviderToCustomer, Peer };

/// Relationship of the neighbour a route was learned from, seen from the
/// route holder. Declaration order is preference order, lowest first.
enum class RouteClass : std::uint8_t { Provider = 0, Peer = 1, Customer = 2 };

enum class Provenance : std::uint8_t { Known, Inferred };

std::string_view to_string(RouteClass cls);
std::string_view to_string(Provenance provenance);
RouteClass parse_route_class(std::string_view text);
Provenance parse_provenance(std::string_view text);

/// One stored edge. For ProviderToCustomer, `first` is the provider.
struct AsEdge {
  Asn first;
  Asn second;
  Relationship relationship = Relationship::Peer;

  bool operator==(const AsEdge&) const = default;
};

class AsGraphBuilder;

/// Relationship-annotated AS topology plus prefix origins and country tags.
/// Immutable once built; nodes are indexed in ascending ASN order, so index
/// order and ASN order agree.
class AsGraph {
 public:
  using Index = std::uint32_t;

  std::size_t size() const noexcept { return nodes_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }
  std::span<const Asn> nodes() const noexcept { return nodes_; }

  bool contains(Asn asn) const;
  std::optional<Index> find(Asn asn) const;
  Index index_of(Asn asn) const;
  Asn asn(Index index) const { return nodes_[index]; }

  std::span<const Index> providers(Index index) const { return providers_[index]; }
  std::span<const Index> customers(Index index) const { return customers_[index]; }
  std::span<const Index> peers(Index index) const { return peers_[index]; }
  std::size_t degree(Index index) const;

  /// Class of a route `from` would learn from `to`; nullopt if not adjacent.
  std::optional<RouteClass> relation(Index from, Index to) const;

  /// All edges in canonical order (ProviderToCustomer as provider|customer,
  /// Peer with the lower ASN first), sorted.
  std::vector<AsEdge> edges() const;
  std::size_t edge_count() const noexcept { return edge_count_; }

  bool has_country_data() const noexcept { return !countries_.empty(); }
  const std::map<Asn, std::string>& countries() const noexcept { return countries_; }
  std::optional<std::string_view> country(Asn asn) const;

  const std::map<Prefix, std::vector<Asn>>& origins() const noexcept { return origins_; }
  /// Origin ASes of `prefix`, sorted; empty when the prefix is unknown.
  std::span<const Asn> origins_of(const Prefix& prefix) const;

  bool operator==(const AsGraph& other) const;

 private:
  friend class AsGraphBuilder;

  std::vector<Asn> nodes_;
  std::unordered_map<std::uint32_t, Index> index_;
  std::vector<std::vector<Index>> providers_;
  std::vector<std::vector<Index>> customers_;
  std::vector<std::vector<Index>> peers_;
  std::size_t edge_count_ = 0;
  std::map<Asn, std::string> countries_;
  std::map<Prefix, std::vector<Asn>> origins_;
};

class AsGraphBuilder {
 public:
  AsGraphBuilder() = default;
  /// Starts from the contents of an existing graph.
  explicit AsGraphBuilder(const AsGraph& graph);

  void add_node(Asn asn);
  bool has_node(Asn asn) const { return nodes_.contains(asn); }

  /// Identical duplicates are accepted; a different relationship for the same
  /// unordered pair throws ConflictingRelationship. Self-loops are rejected.
  void add_edge(const AsEdge& edge);
  void add_provider_customer(Asn provider, Asn customer);
  void add_peer(Asn a, Asn b);

  void set_country(Asn asn, std::string code);
  void add_origin(const Prefix& prefix, Asn asn);

  AsGraph build() const;

 private:
  std::set<Asn> nodes_;
  std::map<std::pair<Asn, Asn>, AsEdge> edges_;
  std::map<Asn, std::string> countries_;
  std::map<Prefix, std::set<Asn>> origins_;
};

bool is_country_code(std::string_view code);

struct AsPath {
  std::vector<Asn> hops;  // source first, origin last
  Prefix target;

  bool operator==(const AsPath&) const = default;
};

struct InferredRoute {
  Asn source;
  Prefix target;
  AsPath path;
  RouteClass route_class = RouteClass::Provider;
  Provenance provenance = Provenance::Inferred;

  bool operator==(const InferredRoute&) const = default;
};

/// Relationship of `to` as seen from `from`. Throws MissingEdge.
RouteClass relationship_of(const AsGraph& graph, Asn from, Asn to);

/// Uphill, at most one peer link, then downhill (reading source to origin).
/// Throws MissingEdge when consecutive hops are not adjacent.
bool valley_free(std::span<const Asn> hops, const AsGraph& graph);
bool valley_free(const AsPath& path, const AsGraph& graph);

bool loop_free(std::span<const Asn> hops);

/// Full consistency check of a stored route against the graph. Returns a
/// description of the first violation, or nullopt when the route is sound.
std::optional<std::string> route_violation(const InferredRoute& route, const AsGraph& graph);

}  // namespace chokemap

template <>
struct std::hash<chokemap::Asn> {
  std::size_t operator()(const chokemap::Asn& asn) const noexcept {
    return std::hash<std::uint32_t>{}(asn.value());
  }
};
