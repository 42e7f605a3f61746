#include "chokemap/pathinfer.hpp"

#include <algorithm>
#include <atomic>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include "chokemap/error.hpp"
#include "line_reader.hpp"
#include "text_util.hpp"

namespace chokemap {

const InferredRoute* TargetRoutes::find(Asn source) const {
  auto it = std::lower_bound(routes.begin(), routes.end(), source,
                             [](const InferredRoute& r, Asn a) { return r.source < a; });
  if (it == routes.end() || it->source != source) return nullptr;
  return &*it;
}

RoutingTable::RoutingTable(std::vector<TargetRoutes> per_target, InferenceStats stats)
    : per_target_(std::move(per_target)), stats_(stats) {
  std::sort(per_target_.begin(), per_target_.end(),
            [](const TargetRoutes& a, const TargetRoutes& b) { return a.target < b.target; });
}

const TargetRoutes* RoutingTable::find(const Prefix& target) const {
  auto it = std::lower_bound(per_target_.begin(), per_target_.end(), target,
                             [](const TargetRoutes& t, const Prefix& p) { return t.target < p; });
  if (it == per_target_.end() || it->target != target) return nullptr;
  return &*it;
}

const InferredRoute* RoutingTable::find(const Prefix& target, Asn source) const {
  const auto* t = find(target);
  return t ? t->find(source) : nullptr;
}

std::size_t RoutingTable::route_count() const {
  std::size_t n = 0;
  for (const auto& t : per_target_) n += t.routes.size();
  return n;
}

namespace {

using Index = AsGraph::Index;
constexpr Index kNone = std::numeric_limits<Index>::max();

struct Candidate {
  bool present = false;
  RouteClass cls = RouteClass::Provider;
  std::uint32_t len = 0;
  Provenance prov = Provenance::Inferred;
  Index next = kNone;
  bool exportable = true;
  const std::vector<Index>* known = nullptr;  // full path when prov == Known
};

/// Same-class comparison: fewer hops, known before inferred, lower next hop,
/// then the lexicographically smaller known path.
bool better_within_class(const Candidate& a, const Candidate& b) {
  if (!b.present) return true;
  if (a.len != b.len) return a.len < b.len;
  if (a.prov != b.prov) return a.prov == Provenance::Known;
  if (a.next != b.next) return a.next < b.next;
  if (a.known && b.known) return *a.known < *b.known;
  return false;
}

bool better(const Candidate& a, const Candidate& b) {
  if (!b.present) return true;
  if (a.cls != b.cls) return a.cls > b.cls;
  return better_within_class(a, b);
}

struct Seed {
  Candidate cand;
  std::vector<Index> path;
};

class BucketQueue {
 public:
  void push(std::uint32_t len, Index node) {
    if (len >= buckets_.size()) buckets_.resize(len + 1);
    buckets_[len].push_back(node);
  }
  std::size_t levels() const { return buckets_.size(); }
  std::vector<Index>& level(std::size_t len) { return buckets_[len]; }

 private:
  std::vector<std::vector<Index>> buckets_;
};

class TargetInference {
 public:
  TargetInference(const AsGraph& graph, const Prefix& target) : graph_(graph), target_(target) {
    const auto n = graph.size();
    cand_.assign(n, {});
    final_.assign(n, false);
    path_.assign(n, {});
    is_origin_.assign(n, false);
    for (Asn o : graph.origins_of(target)) is_origin_[graph.index_of(o)] = true;
  }

  void add_known(const AsPath& known, InferenceStats& stats) {
    std::vector<Index> hops;
    hops.reserve(known.hops.size());
    for (Asn a : known.hops) {
      auto idx = graph_.find(a);
      if (!idx) {
        ++stats.known_paths_ignored;
        return;
      }
      hops.push_back(*idx);
    }
    if (!is_origin_[hops.back()]) {
      ++stats.known_paths_ignored;
      return;
    }
    ++stats.known_paths_used;
    const std::size_t m = hops.size();
    if (m < 2) return;

    // valid[i]: links from i to the end exist and the suffix is valley-free.
    // Scanning from the origin backwards, a suffix stays valid while it is a
    // run of downhill links, optionally one peer link, then uphill links.
    std::vector<bool> valid(m, false);
    valid[m - 1] = true;
    bool seen_lateral_or_up = false;  // peer or uphill link seen (origin side)
    bool broken = false;
    for (std::size_t i = m - 1; i-- > 0;) {
      auto rel = graph_.relation(hops[i], hops[i + 1]);
      if (!rel || broken) {
        broken = true;
      } else if (*rel == RouteClass::Customer) {
        if (seen_lateral_or_up) broken = true;
      } else if (*rel == RouteClass::Peer) {
        if (seen_lateral_or_up) broken = true;
        seen_lateral_or_up = true;
      } else {
        seen_lateral_or_up = true;
      }
      valid[i] = !broken;
    }
    if (!valid[0]) ++stats.known_policy_violations;

    for (std::size_t i = 0; i + 1 < m; ++i) {
      Index at = hops[i];
      if (is_origin_[at]) continue;
      if (!valid[i] && i != 0) continue;
      Seed seed;
      seed.path.assign(hops.begin() + static_cast<std::ptrdiff_t>(i), hops.end());
      auto rel = graph_.relation(at, hops[i + 1]);
      seed.cand.present = true;
      seed.cand.cls = rel.value_or(RouteClass::Provider);
      seed.cand.len = static_cast<std::uint32_t>(m - i);
      seed.cand.prov = Provenance::Known;
      seed.cand.next = hops[i + 1];
      seed.cand.exportable = valid[i];
      seeds_.push_back({at, std::move(seed)});
    }
  }

  TargetRoutes run() {
    // Seeds are referenced by pointer from candidates; fix their storage now.
    for (auto& [at, seed] : seeds_) seed.cand.known = &seed.path;
    customer_stage();
    peer_stage();
    provider_stage();
    return collect();
  }

 private:
  bool on_path(Index node, Index via) const {
    const auto& p = path_[via];
    return std::find(p.begin(), p.end(), node) != p.end();
  }

  void finalize(Index node) {
    const Candidate& c = cand_[node];
    final_[node] = true;
    if (c.prov == Provenance::Known) {
      path_[node] = *c.known;
    } else {
      const auto& tail = path_[c.next];
      path_[node].reserve(tail.size() + 1);
      path_[node].push_back(node);
      path_[node].insert(path_[node].end(), tail.begin(), tail.end());
    }
  }

  void offer_seeds(RouteClass cls, std::vector<Candidate>& into) const {
    for (const auto& [at, seed] : seeds_) {
      if (seed.cand.cls != cls || final_[at]) continue;
      if (better(seed.cand, into[at])) into[at] = seed.cand;
    }
  }

  void customer_stage() {
    BucketQueue queue;
    for (Index i = 0; i < graph_.size(); ++i) {
      if (!is_origin_[i]) continue;
      cand_[i] = Candidate{true, RouteClass::Customer, 1, Provenance::Inferred, kNone, true, nullptr};
      final_[i] = true;
      path_[i] = {i};
      queue.push(1, i);
    }
    offer_seeds(RouteClass::Customer, cand_);
    for (Index i = 0; i < graph_.size(); ++i) {
      if (!final_[i] && cand_[i].present) queue.push(cand_[i].len, i);
    }
    std::vector<bool> done(graph_.size(), false);
    for (std::size_t len = 1; len < queue.levels(); ++len) {
      for (std::size_t k = 0; k < queue.level(len).size(); ++k) {
        Index node = queue.level(len)[k];
        if (done[node]) continue;
        if (!final_[node]) {
          if (cand_[node].len != len) continue;
          finalize(node);
        }
        done[node] = true;
        const Candidate& c = cand_[node];
        if (!c.exportable || c.cls != RouteClass::Customer) continue;
        for (Index p : graph_.providers(node)) {
          if (final_[p] || on_path(p, node)) continue;
          Candidate offer{true, RouteClass::Customer, static_cast<std::uint32_t>(len + 1), Provenance::Inferred, node,
                          true, nullptr};
          if (better(offer, cand_[p])) {
            cand_[p] = offer;
            queue.push(offer.len, p);
          }
        }
      }
    }
  }

  void peer_stage() {
    // Only customer routes cross a peer link, so every input here was fixed
    // by the customer stage; results are installed after the scan.
    std::vector<Candidate> seeded(graph_.size());
    offer_seeds(RouteClass::Peer, seeded);
    std::vector<std::pair<Index, Candidate>> chosen;
    for (Index i = 0; i < graph_.size(); ++i) {
      if (final_[i]) continue;
      Candidate best = seeded[i];
      for (Index n : graph_.peers(i)) {
        if (!final_[n] || !cand_[n].exportable || cand_[n].cls != RouteClass::Customer) continue;
        if (on_path(i, n)) continue;
        Candidate offer{true, RouteClass::Peer, cand_[n].len + 1, Provenance::Inferred, n, true, nullptr};
        if (better(offer, best)) best = offer;
      }
      if (best.present) chosen.emplace_back(i, best);
    }
    for (auto& [i, c] : chosen) {
      cand_[i] = c;
      finalize(i);
    }
  }

  void provider_stage() {
    BucketQueue queue;
    for (Index i = 0; i < graph_.size(); ++i) {
      if (final_[i]) queue.push(cand_[i].len, i);
    }
    offer_seeds(RouteClass::Provider, cand_);
    for (Index i = 0; i < graph_.size(); ++i) {
      if (!final_[i] && cand_[i].present) queue.push(cand_[i].len, i);
    }
    std::vector<bool> done(graph_.size(), false);
    for (std::size_t len = 1; len < queue.levels(); ++len) {
      for (std::size_t k = 0; k < queue.level(len).size(); ++k) {
        Index node = queue.level(len)[k];
        if (done[node]) continue;
        if (!final_[node]) {
          if (cand_[node].len != len) continue;
          finalize(node);
        }
        done[node] = true;
        if (!cand_[node].exportable) continue;
        for (Index c : graph_.customers(node)) {
          if (final_[c] || on_path(c, node)) continue;
          Candidate offer{true, RouteClass::Provider, static_cast<std::uint32_t>(len + 1), Provenance::Inferred, node,
                          true, nullptr};
          if (better(offer, cand_[c])) {
            cand_[c] = offer;
            queue.push(offer.len, c);
          }
        }
      }
    }
  }

  TargetRoutes collect() const {
    TargetRoutes out{target_, {}};
    for (Index i = 0; i < graph_.size(); ++i) {
      if (!final_[i]) continue;
      InferredRoute r;
      r.source = graph_.asn(i);
      r.target = target_;
      r.path.target = target_;
      r.path.hops.reserve(path_[i].size());
      for (Index h : path_[i]) r.path.hops.push_back(graph_.asn(h));
      r.route_class = cand_[i].cls;
      r.provenance = cand_[i].prov;
      out.routes.push_back(std::move(r));
    }
    return out;
  }

  const AsGraph& graph_;
  Prefix target_;
  std::vector<Candidate> cand_;
  std::vector<bool> final_;
  std::vector<std::vector<Index>> path_;
  std::vector<bool> is_origin_;
  std::vector<std::pair<Index, Seed>> seeds_;
};

void add_stats(InferenceStats& into, const InferenceStats& from) {
  into.known_paths_used += from.known_paths_used;
  into.known_policy_violations += from.known_policy_violations;
  into.known_paths_ignored += from.known_paths_ignored;
}

TargetRoutes infer_filtered(const AsGraph& graph, std::span<const AsPath* const> known, const Prefix& target,
                            InferenceStats& stats) {
  if (graph.origins_of(target).empty()) {
    throw Error(ErrorKind::UnknownTarget, "target " + target.to_string() + " has no origin AS");
  }
  TargetInference inference(graph, target);
  for (const AsPath* p : known) inference.add_known(*p, stats);
  return inference.run();
}

}  // namespace

TargetRoutes infer_target_routes(const AsGraph& graph, std::span<const AsPath> known, const Prefix& target,
                                 InferenceStats* stats) {
  std::vector<const AsPath*> relevant;
  for (const auto& p : known) {
    if (p.target == target && !p.hops.empty()) relevant.push_back(&p);
  }
  InferenceStats local;
  auto out = infer_filtered(graph, relevant, target, local);
  if (stats) add_stats(*stats, local);
  return out;
}

RoutingTable infer_routes(const AsGraph& graph, std::span<const AsPath> known, std::span<const Prefix> targets,
                          const InferenceOptions& options) {
  if (graph.empty()) throw Error(ErrorKind::InvalidArgument, "empty AS graph");
  std::vector<Prefix> order(targets.begin(), targets.end());
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());
  for (const auto& t : order) {
    if (graph.origins_of(t).empty()) {
      throw Error(ErrorKind::UnknownTarget, "target " + t.to_string() + " has no origin AS");
    }
  }

  std::map<Prefix, std::vector<const AsPath*>> by_target;
  InferenceStats stats;
  for (const auto& p : known) {
    if (p.hops.empty()) continue;
    if (std::binary_search(order.begin(), order.end(), p.target)) {
      by_target[p.target].push_back(&p);
    } else {
      ++stats.known_paths_ignored;
    }
  }

  std::vector<TargetRoutes> results(order.size());
  std::vector<InferenceStats> partial(order.size());
  auto work = [&](std::size_t i) {
    static const std::vector<const AsPath*> none;
    auto it = by_target.find(order[i]);
    const auto& list = it == by_target.end() ? none : it->second;
    results[i] = infer_filtered(graph, list, order[i], partial[i]);
  };

  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(order.size())));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < order.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> cursor{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = cursor.fetch_add(1)) < order.size();) {
          try {
            work(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  for (const auto& s : partial) add_stats(stats, s);
  return RoutingTable(std::move(results), stats);
}

std::vector<RouteCounts> route_count_summary(const RoutingTable& table) {
  std::vector<RouteCounts> out;
  for (const auto& t : table.targets()) {
    RouteCounts rc;
    rc.target = t.target;
    for (const auto& r : t.routes) {
      ++rc.counts[static_cast<std::size_t>(r.provenance)][static_cast<std::size_t>(r.route_class)];
      ++rc.total;
    }
    out.push_back(rc);
  }
  return out;
}

void write_routing_table(std::ostream& out, const RoutingTable& table) {
  for (const auto& t : table.targets()) {
    const auto prefix = t.target.to_string();
    for (const auto& r : t.routes) {
      out << prefix << '|' << r.source.value() << '|' << to_string(r.route_class) << '|' << to_string(r.provenance)
          << '|';
      for (std::size_t i = 0; i < r.path.hops.size(); ++i) out << (i ? "," : "") << r.path.hops[i].value();
      out << '\n';
    }
  }
}

RoutingTable read_routing_table(std::istream& in) {
  std::map<Prefix, std::vector<InferredRoute>> grouped;
  text::for_each_line(in, [&](std::string_view line, std::size_t) {
    auto f = text::split(line, '|');
    if (f.size() != 5) throw ParseError(0, "expected <prefix>|<asn>|<class>|<provenance>|<hops>");
    InferredRoute r;
    r.target = Prefix::parse(f[0]);
    r.source = parse_asn(f[1]);
    r.route_class = parse_route_class(text::trim(f[2]));
    r.provenance = parse_provenance(text::trim(f[3]));
    r.path.target = r.target;
    for (auto h : text::split(f[4], ',')) r.path.hops.push_back(parse_asn(h));
    if (r.path.hops.empty() || r.path.hops.front() != r.source) throw ParseError(0, "path does not start at source");
    grouped[r.target].push_back(std::move(r));
  });
  std::vector<TargetRoutes> per_target;
  for (auto& [target, routes] : grouped) {
    std::sort(routes.begin(), routes.end(), [](const InferredRoute& a, const InferredRoute& b) {
      return a.source < b.source;
    });
    for (std::size_t i = 1; i < routes.size(); ++i) {
      if (routes[i].source == routes[i - 1].source) {
        throw ParseError(0, "duplicate route for AS" + to_string(routes[i].source) + " to " + target.to_string());
      }
    }
    per_target.push_back({target, std::move(routes)});
  }
  return RoutingTable(std::move(per_target));
}

}  // namespace chokemap
