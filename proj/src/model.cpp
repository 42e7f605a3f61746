#include "chokemap/model.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

#include "chokemap/error.hpp"
#include "text_util.hpp"

namespace chokemap {

Asn::Asn(std::uint64_t value) {
  if (value == 0 || value > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorKind::InvalidArgument, "ASN out of range: " + std::to_string(value));
  }
  value_ = static_cast<std::uint32_t>(value);
}

Asn parse_asn(std::string_view text) {
  auto t = text::trim(text);
  if (t.size() > 2 && (t[0] == 'A' || t[0] == 'a') && (t[1] == 'S' || t[1] == 's')) t.remove_prefix(2);
  auto v = text::to_uint(t);
  if (!v || *v == 0 || *v > std::numeric_limits<std::uint32_t>::max()) {
    throw ParseError(0, "invalid ASN '" + std::string(text) + "'");
  }
  return Asn(*v);
}

std::string to_string(Asn asn) { return std::to_string(asn.value()); }

std::uint32_t parse_ipv4(std::string_view text) {
  auto parts = text::split(text::trim(text), '.');
  if (parts.size() != 4) throw ParseError(0, "invalid IPv4 address '" + std::string(text) + "'");
  std::uint32_t out = 0;
  for (auto part : parts) {
    if (part.empty() || part.size() > 3) throw ParseError(0, "invalid IPv4 address '" + std::string(text) + "'");
    auto v = text::to_uint(part);
    if (!v || *v > 255) throw ParseError(0, "invalid IPv4 address '" + std::string(text) + "'");
    out = (out << 8) | static_cast<std::uint32_t>(*v);
  }
  return out;
}

std::string format_ipv4(std::uint32_t address) {
  return std::to_string(address >> 24) + '.' + std::to_string((address >> 16) & 0xff) + '.' +
         std::to_string((address >> 8) & 0xff) + '.' + std::to_string(address & 0xff);
}

bool looks_like_ipv6(std::string_view text) { return text.find(':') != std::string_view::npos; }

namespace {

std::uint32_t mask_for(int length) {
  return length == 0 ? 0u : ~std::uint32_t{0} << (32 - length);
}

}  // namespace

Prefix::Prefix(std::uint32_t network, int length) {
  if (length < 0 || length > 32) {
    throw Error(ErrorKind::InvalidArgument, "prefix length out of range: " + std::to_string(length));
  }
  if ((network & ~mask_for(length)) != 0) {
    throw Error(ErrorKind::InvalidArgument,
                "host bits set in " + format_ipv4(network) + "/" + std::to_string(length));
  }
  network_ = network;
  length_ = static_cast<std::uint8_t>(length);
}

Prefix Prefix::parse(std::string_view text) {
  auto t = text::trim(text);
  auto slash = t.find('/');
  if (slash == std::string_view::npos) throw ParseError(0, "prefix without length '" + std::string(t) + "'");
  auto address = parse_ipv4(t.substr(0, slash));
  auto length = text::to_uint(t.substr(slash + 1));
  if (!length || *length > 32) throw ParseError(0, "invalid prefix length in '" + std::string(t) + "'");
  if ((address & ~mask_for(static_cast<int>(*length))) != 0) {
    throw ParseError(0, "host bits set in prefix '" + std::string(t) + "'");
  }
  return Prefix(address, static_cast<int>(*length));
}

bool Prefix::contains(std::uint32_t address) const noexcept {
  return (address & mask_for(length_)) == network_;
}

std::string Prefix::to_string() const { return format_ipv4(network_) + "/" + std::to_string(length_); }

std::string_view to_string(RouteClass cls) {
  switch (cls) {
    case RouteClass::Customer: return "customer";
    case RouteClass::Peer: return "peer";
    case RouteClass::Provider: return "provider";
  }
  return "?";
}

std::string_view to_string(Provenance provenance) {
  return provenance == Provenance::Known ? "known" : "inferred";
}

RouteClass parse_route_class(std::string_view text) {
  if (text == "customer") return RouteClass::Customer;
  if (text == "peer") return RouteClass::Peer;
  if (text == "provider") return RouteClass::Provider;
  throw ParseError(0, "unknown route class '" + std::string(text) + "'");
}

Provenance parse_provenance(std::string_view text) {
  if (text == "known") return Provenance::Known;
  if (text == "inferred") return Provenance::Inferred;
  throw ParseError(0, "unknown provenance '" + std::string(text) + "'");
}

bool is_country_code(std::string_view code) {
  return code.size() == 2 && std::isupper(static_cast<unsigned char>(code[0])) &&
         std::isupper(static_cast<unsigned char>(code[1]));
}

// AsGraph --------------------------------------------------------------------

bool AsGraph::contains(Asn asn) const { return index_.contains(asn.value()); }

std::optional<AsGraph::Index> AsGraph::find(Asn asn) const {
  auto it = index_.find(asn.value());
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

AsGraph::Index AsGraph::index_of(Asn asn) const {
  auto it = index_.find(asn.value());
  if (it == index_.end()) throw Error(ErrorKind::InvalidArgument, "AS" + to_string(asn) + " not in graph");
  return it->second;
}

std::size_t AsGraph::degree(Index index) const {
  return providers_[index].size() + customers_[index].size() + peers_[index].size();
}

std::optional<RouteClass> AsGraph::relation(Index from, Index to) const {
  auto in = [](const std::vector<Index>& list, Index v) {
    return std::binary_search(list.begin(), list.end(), v);
  };
  if (in(customers_[from], to)) return RouteClass::Customer;
  if (in(providers_[from], to)) return RouteClass::Provider;
  if (in(peers_[from], to)) return RouteClass::Peer;
  return std::nullopt;
}

std::vector<AsEdge> AsGraph::edges() const {
  std::vector<AsEdge> out;
  out.reserve(edge_count_);
  for (Index i = 0; i < nodes_.size(); ++i) {
    for (Index c : customers_[i]) out.push_back({nodes_[i], nodes_[c], Relationship::ProviderToCustomer});
    for (Index p : peers_[i]) {
      if (i < p) out.push_back({nodes_[i], nodes_[p], Relationship::Peer});
    }
  }
  std::sort(out.begin(), out.end(), [](const AsEdge& a, const AsEdge& b) {
    return std::tie(a.first, a.second, a.relationship) < std::tie(b.first, b.second, b.relationship);
  });
  return out;
}

std::optional<std::string_view> AsGraph::country(Asn asn) const {
  auto it = countries_.find(asn);
  if (it == countries_.end()) return std::nullopt;
  return std::string_view(it->second);
}

std::span<const Asn> AsGraph::origins_of(const Prefix& prefix) const {
  auto it = origins_.find(prefix);
  if (it == origins_.end()) return {};
  return it->second;
}

bool AsGraph::operator==(const AsGraph& other) const {
  return nodes_ == other.nodes_ && providers_ == other.providers_ && customers_ == other.customers_ &&
         peers_ == other.peers_ && countries_ == other.countries_ && origins_ == other.origins_;
}

// AsGraphBuilder --------------------------------------------------------------

AsGraphBuilder::AsGraphBuilder(const AsGraph& graph) {
  for (Asn a : graph.nodes()) nodes_.insert(a);
  for (const auto& e : graph.edges()) add_edge(e);
  countries_ = graph.countries();
  for (const auto& [prefix, asns] : graph.origins()) origins_[prefix].insert(asns.begin(), asns.end());
}

void AsGraphBuilder::add_node(Asn asn) {
  if (asn.value() == 0) throw Error(ErrorKind::InvalidArgument, "ASN 0 is reserved");
  nodes_.insert(asn);
}

void AsGraphBuilder::add_edge(const AsEdge& edge) {
  if (edge.first == edge.second) {
    throw Error(ErrorKind::InvalidArgument, "self-loop on AS" + to_string(edge.first));
  }
  auto key = std::minmax(edge.first, edge.second);
  auto [it, inserted] = edges_.try_emplace({key.first, key.second}, edge);
  if (!inserted) {
    const AsEdge& old = it->second;
    bool same = old.relationship == edge.relationship &&
                (edge.relationship == Relationship::Peer || old.first == edge.first);
    if (!same) {
      throw Error(ErrorKind::ConflictingRelationship,
                  "conflicting relationship between AS" + to_string(key.first) + " and AS" + to_string(key.second));
    }
    return;
  }
  add_node(edge.first);
  add_node(edge.second);
}

void AsGraphBuilder::add_provider_customer(Asn provider, Asn customer) {
  add_edge({provider, customer, Relationship::ProviderToCustomer});
}

void AsGraphBuilder::add_peer(Asn a, Asn b) { add_edge({a, b, Relationship::Peer}); }

void AsGraphBuilder::set_country(Asn asn, std::string code) {
  if (!is_country_code(code)) throw Error(ErrorKind::InvalidArgument, "invalid country code '" + code + "'");
  add_node(asn);
  countries_[asn] = std::move(code);
}

void AsGraphBuilder::add_origin(const Prefix& prefix, Asn asn) {
  add_node(asn);
  origins_[prefix].insert(asn);
}

AsGraph AsGraphBuilder::build() const {
  AsGraph g;
  g.nodes_.assign(nodes_.begin(), nodes_.end());
  const auto n = g.nodes_.size();
  g.index_.reserve(n);
  for (AsGraph::Index i = 0; i < n; ++i) g.index_.emplace(g.nodes_[i].value(), i);
  g.providers_.assign(n, {});
  g.customers_.assign(n, {});
  g.peers_.assign(n, {});
  for (const auto& [key, e] : edges_) {
    auto a = g.index_.at(e.first.value());
    auto b = g.index_.at(e.second.value());
    if (e.relationship == Relationship::ProviderToCustomer) {
      g.customers_[a].push_back(b);
      g.providers_[b].push_back(a);
    } else {
      g.peers_[a].push_back(b);
      g.peers_[b].push_back(a);
    }
  }
  for (auto* lists : {&g.providers_, &g.customers_, &g.peers_}) {
    for (auto& l : *lists) std::sort(l.begin(), l.end());
  }
  g.edge_count_ = edges_.size();
  g.countries_ = countries_;
  for (const auto& [prefix, asns] : origins_) g.origins_.emplace(prefix, std::vector<Asn>(asns.begin(), asns.end()));
  return g;
}

// Path predicates ---------------------------------------------------------------

RouteClass relationship_of(const AsGraph& graph, Asn from, Asn to) {
  auto a = graph.find(from);
  auto b = graph.find(to);
  std::optional<RouteClass> rel;
  if (a && b) rel = graph.relation(*a, *b);
  if (!rel) {
    throw Error(ErrorKind::MissingEdge, "AS" + to_string(from) + " and AS" + to_string(to) + " are not adjacent");
  }
  return *rel;
}

bool valley_free(std::span<const Asn> hops, const AsGraph& graph) {
  bool descending = false;  // set after a peer or downhill step
  for (std::size_t i = 0; i + 1 < hops.size(); ++i) {
    switch (relationship_of(graph, hops[i], hops[i + 1])) {
      case RouteClass::Provider:
        if (descending) return false;
        break;
      case RouteClass::Peer:
        if (descending) return false;
        descending = true;
        break;
      case RouteClass::Customer:
        descending = true;
        break;
    }
  }
  return true;
}

bool valley_free(const AsPath& path, const AsGraph& graph) { return valley_free(path.hops, graph); }

bool loop_free(std::span<const Asn> hops) {
  std::vector<Asn> sorted(hops.begin(), hops.end());
  std::sort(sorted.begin(), sorted.end());
  return std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
}

std::optional<std::string> route_violation(const InferredRoute& route, const AsGraph& graph) {
  const auto& hops = route.path.hops;
  if (hops.empty()) return "empty path";
  if (hops.front() != route.source) return "path does not start at source";
  if (route.path.target != route.target) return "path target mismatch";
  if (!loop_free(hops)) return "path has a loop";
  auto origins = graph.origins_of(route.target);
  if (!origins.empty() && !std::binary_search(origins.begin(), origins.end(), hops.back())) {
    return "path does not end at an origin";
  }
  if (hops.size() == 1) {
    if (route.route_class != RouteClass::Customer) return "origin route must be customer class";
    return std::nullopt;
  }
  try {
    if (!valley_free(hops, graph)) return "path is not valley-free";
    if (relationship_of(graph, hops[0], hops[1]) != route.route_class) return "route class mismatch";
  } catch (const Error& e) {
    return std::string(e.what());
  }
  return std::nullopt;
}

}  // namespace chokemap
