#include "minios/mesh.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace minios::mesh {

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling keeps the result exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  for (;;) {
    const std::uint64_t v = eng_();
    if (v < limit) return v % n;
  }
}

namespace {

std::pair<NodeId, NodeId> key(NodeId a, NodeId b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

}  // namespace

bool Topology::has_node(NodeId n) const {
  return std::binary_search(nodes.begin(), nodes.end(), n);
}

void Topology::add_link(NodeId a, NodeId b, double loss) {
  if (a == b) throw ConfigError("self-link on node " + std::to_string(a));
  if (!has_node(a) || !has_node(b))
    throw ConfigError("link " + std::to_string(a) + "-" + std::to_string(b) + " names an unknown node");
  if (!(loss >= 0.0 && loss <= 1.0)) throw ConfigError("loss must be in [0,1]");
  links[key(a, b)] = loss;
}

std::vector<NodeId> Topology::neighbors(NodeId n) const {
  std::vector<NodeId> out;
  for (const auto& [k, loss] : links) {
    if (k.first == n) out.push_back(k.second);
    else if (k.second == n) out.push_back(k.first);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double Topology::loss(NodeId a, NodeId b) const {
  auto it = links.find(key(a, b));
  return it == links.end() ? 1.0 : it->second;
}

bool Topology::connected() const {
  if (nodes.empty()) return true;
  std::set<NodeId> seen{nodes.front()};
  std::vector<NodeId> stack{nodes.front()};
  while (!stack.empty()) {
    NodeId n = stack.back();
    stack.pop_back();
    for (NodeId m : neighbors(n))
      if (seen.insert(m).second) stack.push_back(m);
  }
  return seen.size() == nodes.size();
}

Topology Topology::parse(std::string_view text) {
  Topology t;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    auto fail = [&](const std::string& why) {
      throw ConfigError("topology line " + std::to_string(lineno) + ": " + why);
    };
    if (!header) {
      std::size_t n = 0;
      std::string seed_kw;
      if (first != "nodes" || !(ls >> n >> seed_kw >> t.seed) || seed_kw != "seed")
        fail("expected 'nodes N seed S'");
      if (n == 0 || n > 0xFFFF) fail("node count out of range");
      t.nodes.resize(n);
      std::iota(t.nodes.begin(), t.nodes.end(), NodeId{0});
      header = true;
      continue;
    }
    long a = 0, b = 0;
    double loss = 0;
    try {
      a = std::stol(first);
    } catch (const std::exception&) {
      fail("expected 'A B loss'");
    }
    if (!(ls >> b >> loss)) fail("expected 'A B loss'");
    if (a < 0 || b < 0 || a > 0xFFFF || b > 0xFFFF) fail("node id out of range");
    std::string extra;
    if (ls >> extra) fail("trailing text");
    try {
      t.add_link(static_cast<NodeId>(a), static_cast<NodeId>(b), loss);
    } catch (const ConfigError& e) {
      fail(e.what());
    }
  }
  if (!header) throw ConfigError("topology: missing 'nodes N seed S' header");
  return t;
}

std::string Topology::to_text() const {
  std::ostringstream os;
  os << "nodes " << nodes.size() << " seed " << seed << '\n';
  for (const auto& [k, loss] : links) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%u %u %.6g\n", k.first, k.second, loss);
    os << buf;
  }
  return os.str();
}

namespace {

Topology with_nodes(std::size_t n, std::uint64_t seed) {
  Topology t;
  t.nodes.resize(n);
  std::iota(t.nodes.begin(), t.nodes.end(), NodeId{0});
  t.seed = seed;
  return t;
}

}  // namespace

Topology Topology::line(std::size_t n, double loss, std::uint64_t seed) {
  Topology t = with_nodes(n, seed);
  for (std::size_t i = 1; i < n; ++i)
    t.add_link(static_cast<NodeId>(i - 1), static_cast<NodeId>(i), loss);
  return t;
}

Topology Topology::clique(std::size_t n, double loss, std::uint64_t seed) {
  Topology t = with_nodes(n, seed);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      t.add_link(static_cast<NodeId>(i), static_cast<NodeId>(j), loss);
  return t;
}

Topology Topology::random_connected(std::size_t n, std::size_t extra, double loss,
                                    std::uint64_t seed) {
  Topology t = with_nodes(n, seed);
  Rng rng(seed ^ 0x9E37'79B9'7F4A'7C15ULL);
  // Random attachment tree: node i links to a random earlier node.
  for (std::size_t i = 1; i < n; ++i)
    t.add_link(static_cast<NodeId>(i), static_cast<NodeId>(rng.below(i)), loss);
  const std::size_t max_links = n * (n - 1) / 2;
  for (std::size_t added = 0; added < extra && t.links.size() < max_links;) {
    auto a = static_cast<NodeId>(rng.below(n));
    auto b = static_cast<NodeId>(rng.below(n));
    if (a == b || t.links.contains(key(a, b))) continue;
    t.add_link(a, b, loss);
    ++added;
  }
  return t;
}

std::vector<Delivery> broadcast(const Topology& topo, NodeId from, const Frame& frame, Rng& rng) {
  if (!topo.has_node(from)) throw ConfigError("unknown node " + std::to_string(from));
  std::vector<Delivery> out;
  for (NodeId n : topo.neighbors(from)) {
    // One draw per neighbor regardless of loss, so the stream is stable.
    if (!rng.bernoulli(topo.loss(from, n))) out.push_back({n, frame});
  }
  return out;
}

World::World(Topology topo) : topo_(std::move(topo)), rng_(topo_.seed) {}

void World::attach(NodeId id, MeshNode* node) {
  if (!topo_.has_node(id)) throw ConfigError("unknown node " + std::to_string(id));
  nodes_[id] = node;
}

void World::advance(std::uint64_t ticks) {
  for (std::uint64_t step = 0; step < ticks; ++step) {
    ++now_;
    std::vector<Delivery> due;
    due.swap(pending_);
    std::stable_sort(due.begin(), due.end(),
                     [](const Delivery& a, const Delivery& b) { return a.to < b.to; });
    for (const auto& d : due) {
      if (auto it = nodes_.find(d.to); it != nodes_.end() && it->second != nullptr) {
        it->second->deliver(d.frame);
        ++delivered_;
      }
    }
    for (auto& [id, node] : nodes_) {
      if (node == nullptr) continue;
      node->tick(now_);
      for (auto& f : node->take_outgoing()) {
        f.src = id;
        ++sent_;
        auto out = broadcast(topo_, id, f, rng_);
        pending_.insert(pending_.end(), std::make_move_iterator(out.begin()),
                        std::make_move_iterator(out.end()));
      }
    }
  }
}

}  // namespace minios::mesh
