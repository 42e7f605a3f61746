#include "chokemap/hijack.hpp"

#include <algorithm>
#include <atomic>
#include <array>
#include <map>
#include <mutex>
#include <thread>

#include "chokemap/error.hpp"

namespace chokemap {

std::vector<Asn> FakeAdvertisement::announced() const {
  if (claimed_path.empty()) return {attacker};
  return claimed_path;
}

AcceptDecision accepts_fake(std::optional<RouteClass> current, std::size_t current_length, RouteClass fake,
                            std::size_t fake_length) {
  if (!current) return {true, AcceptRule::NoRoute};
  const bool shorter = fake_length < current_length;
  switch (*current) {
    case RouteClass::Customer:
      return {fake == RouteClass::Customer && shorter, AcceptRule::CustomerRoute};
    case RouteClass::Provider:
      // A longer provider fake is not "shorter", and the catch-all clause
      // only covers the other classes.
      return {fake != RouteClass::Provider || shorter, AcceptRule::ProviderRoute};
    case RouteClass::Peer:
      if (fake == RouteClass::Provider) return {false, AcceptRule::PeerRoute};
      return {fake == RouteClass::Customer || shorter, AcceptRule::PeerRoute};
  }
  return {};
}

namespace {

void count_country(CountryCounts& c, const AsGraph& graph, Asn asn, const std::string& home) {
  auto cc = graph.country(asn);
  if (!cc) {
    ++c.unknown;
  } else if (!home.empty() && *cc == home) {
    ++c.home;
  } else {
    ++c.foreign;
  }
}

constexpr std::size_t kClasses = 3;

std::size_t slot(RouteClass c) { return static_cast<std::size_t>(c); }

// Shortest accepted fake of one class at one AS.
struct Held {
  std::size_t length = 0;  // 0 = none
  std::vector<Asn> path;
};

}  // namespace

HijackOutcome simulate_hijack(const AsGraph& graph, const RoutingTable& baseline, const FakeAdvertisement& adv,
                              const HijackOptions& options) {
  auto attacker_idx = graph.find(adv.attacker);
  if (!attacker_idx) throw Error(ErrorKind::UnknownAttacker, "attacker AS" + to_string(adv.attacker) + " is not in the graph");
  const TargetRoutes* routes = baseline.find(adv.target);
  if (!routes) throw Error(ErrorKind::UnknownTarget, "baseline has no routes for " + adv.target.to_string());
  auto announced = adv.announced();
  if (announced.front() != adv.attacker) {
    throw Error(ErrorKind::InvalidArgument, "claimed path must start at the attacker");
  }
  if (!loop_free(announced)) throw Error(ErrorKind::InvalidArgument, "claimed path contains a loop");

  HijackOutcome out;
  out.attacker = adv.attacker;
  out.target = adv.target;
  out.claimed_path = announced;

  const std::size_t n = graph.size();
  std::vector<std::optional<RouteClass>> base_class(n);
  std::vector<std::size_t> base_len(n, 0);
  for (const auto& r : routes->routes) {
    if (auto i = graph.find(r.source)) {
      base_class[*i] = r.route_class;
      base_len[*i] = r.path.hops.size();
    }
  }

  // Every AS judges each offer against its legitimate route and re-exports
  // whatever it accepts. Acceptance is monotone in length, so per (AS, class)
  // only the shortest accepted offer matters; offers grow by one hop per
  // step, so settling layer by layer finds it. Ties go to the lowest sender.
  std::vector<std::array<Held, kClasses>> held(n);
  struct State {
    std::size_t node;
    RouteClass cls;
  };
  std::vector<State> frontier;
  const std::vector<Asn>* attacker_path = &announced;

  auto senders_of = [&](const std::vector<State>& layer) {
    // (receiver, class) -> best (sender ASN, offered path)
    std::map<std::pair<std::size_t, std::size_t>, std::pair<Asn, const std::vector<Asn>*>> best;
    auto offer = [&](std::size_t to, std::size_t from, const std::vector<Asn>& path) {
      if (to == *attacker_idx) return;
      const Asn me = graph.asn(to);
      if (std::find(path.begin(), path.end(), me) != path.end()) return;
      RouteClass cls = *graph.relation(to, from);
      if (held[to][slot(cls)].length != 0) return;  // settled at a shorter length
      if (!accepts_fake(base_class[to], base_len[to], cls, path.size() + 1).accept) return;
      auto key = std::make_pair(to, slot(cls));
      auto it = best.find(key);
      if (it == best.end() || graph.asn(from) < it->second.first) best[key] = {graph.asn(from), &path};
    };
    for (const State& s : layer) {
      const std::vector<Asn>& path = s.node == *attacker_idx ? *attacker_path : held[s.node][slot(s.cls)].path;
      const bool to_all = s.node == *attacker_idx || s.cls == RouteClass::Customer;
      for (auto c : graph.customers(s.node)) offer(c, s.node, path);
      if (!to_all) continue;
      for (auto p : graph.peers(s.node)) offer(p, s.node, path);
      for (auto p : graph.providers(s.node)) offer(p, s.node, path);
    }
    return best;
  };

  frontier.push_back({*attacker_idx, RouteClass::Customer});
  while (!frontier.empty()) {
    auto best = senders_of(frontier);
    frontier.clear();
    for (const auto& [key, choice] : best) {
      auto [node, cls_slot] = key;
      Held& h = held[node][cls_slot];
      h.path.reserve(choice.second->size() + 1);
      h.path.push_back(graph.asn(node));
      h.path.insert(h.path.end(), choice.second->begin(), choice.second->end());
      h.length = h.path.size();
      frontier.push_back({node, static_cast<RouteClass>(cls_slot)});
    }
    if (options.neighbors_only) break;
  }

  for (std::size_t i = 0; i < n; ++i) {
    // Report the most preferred accepted fake: class, then length.
    for (RouteClass c : {RouteClass::Customer, RouteClass::Peer, RouteClass::Provider}) {
      const Held& h = held[i][slot(c)];
      if (h.length == 0) continue;
      auto decision = accepts_fake(base_class[i], base_len[i], c, h.length);
      out.poisoned[graph.asn(i)] = PoisonedRoute{decision.rule, c, h.path};
      break;
    }
  }
  for (const auto& [asn, route] : out.poisoned) count_country(out.counts, graph, asn, options.home);
  return out;
}

std::vector<Asn> top_by_degree(const AsGraph& graph, std::size_t n, const std::set<std::string>& countries) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    if (!countries.empty()) {
      auto cc = graph.country(graph.asn(i));
      if (!cc || !countries.contains(std::string(*cc))) continue;
    }
    idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return graph.degree(a) > graph.degree(b); });
  if (idx.size() > n) idx.resize(n);
  std::vector<Asn> out;
  for (auto i : idx) out.push_back(graph.asn(i));
  return out;
}

std::vector<AttackerSummary> rank_attackers(const AsGraph& graph, const RoutingTable& baseline,
                                            const AttackerRankOptions& options) {
  const auto candidates = top_by_degree(graph, options.top, options.candidate_countries);
  std::vector<AttackerSummary> out(candidates.size());

  auto run_one = [&](std::size_t k) {
    AttackerSummary& s = out[k];
    s.attacker = candidates[k];
    s.degree = graph.degree(graph.index_of(s.attacker));
    for (const auto& t : baseline.targets()) {
      auto outcome = simulate_hijack(graph, baseline, {s.attacker, t.target, {}}, options.hijack);
      s.per_target.push_back(outcome.poisoned.size());
      for (const auto& [asn, route] : outcome.poisoned) s.affected.insert(asn);
    }
    for (Asn a : s.affected) count_country(s.counts, graph, a, options.hijack.home);
  };

  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(candidates.size())));
  if (jobs <= 1) {
    for (std::size_t k = 0; k < candidates.size(); ++k) run_one(k);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> workers;
  for (unsigned j = 0; j < jobs; ++j) {
    workers.emplace_back([&] {
      for (std::size_t k; (k = next++) < candidates.size();) {
        try {
          run_one(k);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace chokemap
