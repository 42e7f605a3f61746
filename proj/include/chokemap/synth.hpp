#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <string>

#include "chokemap/ingest.hpp"

namespace chokemap::synth {

/// Parameters of a synthetic three-tier topology. ASNs are assigned
/// consecutively from 1: transits first, then regionals, then stubs.
struct SynthSpec {
  std::uint64_t seed = 1;
  std::size_t n_stub = 10;
  std::size_t n_regional = 3;
  std::size_t n_transit = 2;
  /// Probability that a regional or stub AS gets one extra peer link to
  /// another AS of its tier. Transits always form a full peer clique.
  double peer_density = 0.1;
  /// Country code -> fraction of ASes. Whatever the fractions leave over is
  /// untagged.
  std::map<std::string, double> country_mix;
  std::size_t n_targets = 4;
  /// Fraction of inferred non-trivial routes published as known paths.
  double known_path_fraction = 0.05;
  /// Fraction of regional and stub ASes that host DNS resolvers.
  double resolver_fraction = 0.5;
  /// Router-level traceroute sub-paths generated per transit AS.
  std::size_t traces_per_transit = 20;

  bool operator==(const SynthSpec&) const = default;
};

/// Throws InfeasibleSpec when the spec cannot produce a connected hierarchy
/// or its fractions are out of range.
void validate(const SynthSpec& spec);

DatasetBundle generate(const SynthSpec& spec);

/// Small random relationship graph for oracle sweeps: 2..max_nodes ASes, an
/// acyclic provider hierarchy from a random ranking, random peerings, and one
/// or two origins of `target`.
AsGraph random_graph(std::uint64_t seed, std::size_t max_nodes, const Prefix& target);

/// `key = value` lines; `country_mix = IN:0.6,PK:0.3`.
SynthSpec parse_spec(std::istream& in);
void write_spec(std::ostream& out, const SynthSpec& spec);

/// mt19937_64 output is fixed by the standard; the standard distributions are
/// not, so bounded sampling is done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, bound); bound must be positive.
  std::uint64_t below(std::uint64_t bound);
  /// Uniform in [0, 1).
  double unit();
  bool chance(double p) { return unit() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace chokemap::synth
