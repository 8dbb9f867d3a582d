#pragma once

// Radio medium: topology graph with per-link Bernoulli loss, a seeded RNG,
// and a lockstep world runner with one-tick delivery latency.

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "minios/frame.hpp"
#include "minios/types.hpp"

namespace minios::mesh {

using NodeId = std::uint16_t;

using minios::ConfigError;

/// Seeded 64-bit Mersenne Twister with fixed reductions, so draws do not
/// depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }
  /// Uniform in [0, 1) with 53 bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);
  /// Uniform integer in [lo, hi); lo < hi.
  std::uint64_t range(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo); }

  bool operator==(const Rng& o) const { return eng_ == o.eng_; }

 private:
  std::mt19937_64 eng_;
};

struct Topology {
  std::vector<NodeId> nodes;  // ascending
  std::map<std::pair<NodeId, NodeId>, double> links;  // key (lo, hi), value loss
  std::uint64_t seed = 0;

  bool has_node(NodeId n) const;
  /// Rejects self-links, unknown nodes, and loss outside [0,1].
  void add_link(NodeId a, NodeId b, double loss);
  std::vector<NodeId> neighbors(NodeId n) const;  // ascending
  double loss(NodeId a, NodeId b) const;
  bool connected() const;

  /// "nodes N seed S" header, then "A B loss" per line; '#' comments.
  static Topology parse(std::string_view text);
  std::string to_text() const;

  static Topology line(std::size_t n, double loss, std::uint64_t seed);
  static Topology clique(std::size_t n, double loss, std::uint64_t seed);
  /// Random spanning tree plus `extra` random edges; always connected.
  static Topology random_connected(std::size_t n, std::size_t extra, double loss,
                                   std::uint64_t seed);
};

struct Delivery {
  NodeId to = 0;
  Frame frame;
  bool operator==(const Delivery&) const = default;
};

/// Each neighbor of `from` independently receives the frame with
/// probability 1 - loss; deliveries come out in ascending node id.
std::vector<Delivery> broadcast(const Topology& topo, NodeId from, const Frame& frame, Rng& rng);

/// A participant in the lockstep world.
class MeshNode {
 public:
  virtual ~MeshNode() = default;
  virtual void deliver(const Frame& f) = 0;
  virtual void tick(Tick now) = 0;
  virtual std::vector<Frame> take_outgoing() = 0;
};

class World {
 public:
  explicit World(Topology topo);

  /// Nodes must be attached for every topology node before advancing.
  void attach(NodeId id, MeshNode* node);

  /// One step: deliver frames sent last tick, then tick every node in
  /// ascending id, collecting and broadcasting its outgoing frames.
  void advance(std::uint64_t ticks = 1);

  Tick now() const { return now_; }
  const Topology& topology() const { return topo_; }
  std::uint64_t frames_sent() const { return sent_; }
  std::uint64_t frames_delivered() const { return delivered_; }

 private:
  Topology topo_;
  Rng rng_;
  std::map<NodeId, MeshNode*> nodes_;
  std::vector<Delivery> pending_;
  Tick now_ = 0;
  std::uint64_t sent_ = 0;
  std::uint64_t delivered_ = 0;
};

}  // namespace minios::mesh
