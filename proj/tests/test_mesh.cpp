#include <gtest/gtest.h>

#include "minios/mesh.hpp"

using namespace minios;
using namespace minios::mesh;

namespace {

Topology star(std::size_t leaves, double loss, std::uint64_t seed) {
  Topology t = Topology::parse("nodes " + std::to_string(leaves + 1) + " seed " + std::to_string(seed));
  for (std::size_t i = 1; i <= leaves; ++i) t.add_link(0, static_cast<NodeId>(i), loss);
  return t;
}

struct Recorder : MeshNode {
  std::vector<Tick> ticks;
  std::vector<std::pair<Tick, Frame>> got;
  std::map<Tick, Frame> sends;
  Tick now = 0;

  void deliver(const Frame& f) override { got.emplace_back(now + 1, f); }
  void tick(Tick t) override {
    now = t;
    ticks.push_back(t);
  }
  std::vector<Frame> take_outgoing() override {
    auto it = sends.find(now);
    if (it == sends.end()) return {};
    return {it->second};
  }
};

}  // namespace

TEST(Topology, ParseAndValidate) {
  auto t = Topology::parse("# demo\nnodes 3 seed 9\n0 1 0.25\n1 2 0\n");
  EXPECT_EQ(t.nodes.size(), 3u);
  EXPECT_EQ(t.seed, 9u);
  EXPECT_DOUBLE_EQ(t.loss(1, 0), 0.25);
  EXPECT_EQ(t.neighbors(1), (std::vector<NodeId>{0, 2}));
  EXPECT_TRUE(t.connected());
  EXPECT_EQ(Topology::parse(t.to_text()).links, t.links);
  EXPECT_THROW(Topology::parse("nodes 2 seed 1\n0 0 0.1\n"), ConfigError);
  EXPECT_THROW(Topology::parse("nodes 2 seed 1\n0 1 1.5\n"), ConfigError);
  EXPECT_THROW(Topology::parse("nodes 2 seed 1\n0 5 0\n"), ConfigError);
  EXPECT_THROW(Topology::parse("0 1 0\n"), ConfigError);
}

TEST(Topology, RandomConnectedIsConnected) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto t = Topology::random_connected(20, 10, 0.3, seed);
    EXPECT_TRUE(t.connected());
    EXPECT_EQ(t.links.size(), 29u);
  }
}

TEST(Broadcast, IsolatedNodeHasNoDeliveries) {
  auto t = Topology::parse("nodes 1 seed 0");
  Rng rng(1);
  EXPECT_TRUE(broadcast(t, 0, Frame{}, rng).empty());
}

TEST(Broadcast, LosslessPairDeliversOnce) {
  auto t = Topology::line(2, 0.0, 1);
  Rng rng(1);
  auto d = broadcast(t, 0, Frame{}, rng);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].to, 1);
  EXPECT_THROW(broadcast(t, 7, Frame{}, rng), ConfigError);
}

TEST(Broadcast, StarMatchesSeededDrawsAndMean) {
  const auto t = star(10, 0.3, 5);
  Rng rng(5);
  Rng oracle(5);
  double total = 0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    auto d = broadcast(t, 0, Frame{}, rng);
    // Oracle: one 53-bit uniform per leaf in ascending order, kept iff >= loss.
    std::size_t expect = 0;
    for (int leaf = 1; leaf <= 10; ++leaf)
      if (static_cast<double>(oracle.next() >> 11) * 0x1.0p-53 >= 0.3) ++expect;
    ASSERT_EQ(d.size(), expect);
    for (std::size_t k = 1; k < d.size(); ++k) ASSERT_LT(d[k - 1].to, d[k].to);
    total += static_cast<double>(d.size());
  }
  EXPECT_NEAR(total / trials, 7.0, 0.15);
}

TEST(Broadcast, ConservationProperty) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto t = Topology::random_connected(12, 8, 0.5, seed);
    Rng rng(seed);
    for (NodeId n : t.nodes) {
      auto nb = t.neighbors(n);
      for (const auto& d : broadcast(t, n, Frame{}, rng))
        EXPECT_TRUE(std::binary_search(nb.begin(), nb.end(), d.to));
    }
    Topology lossless = t;
    for (auto& [k, loss] : lossless.links) loss = 0.0;
    for (NodeId n : t.nodes) {
      std::vector<NodeId> got;
      for (const auto& d : broadcast(lossless, n, Frame{}, rng)) got.push_back(d.to);
      EXPECT_EQ(got, lossless.neighbors(n));
    }
  }
}

TEST(World, SingleNodeObservesTicks) {
  World w(Topology::parse("nodes 1 seed 0"));
  Recorder r;
  w.attach(0, &r);
  w.advance(5);
  EXPECT_EQ(r.ticks, (std::vector<Tick>{1, 2, 3, 4, 5}));
}

TEST(World, OneTickLatency) {
  World w(Topology::line(2, 0.0, 3));
  Recorder a, b;
  Frame f;
  f.payload = {1, 2, 3};
  a.sends[3] = f;
  w.attach(0, &a);
  w.attach(1, &b);
  w.advance(6);
  ASSERT_EQ(b.got.size(), 1u);
  EXPECT_EQ(b.got[0].first, 4u);
  EXPECT_EQ(b.got[0].second.src, 0);
  EXPECT_EQ(b.got[0].second.payload, f.payload);
  EXPECT_TRUE(a.got.empty());
}

TEST(World, DeterministicFromSnapshot) {
  auto run = [](std::uint64_t seed) {
    World w(Topology::random_connected(6, 4, 0.4, seed));
    std::vector<Recorder> nodes(6);
    for (NodeId i = 0; i < 6; ++i) {
      for (Tick t = 1; t <= 10; ++t)
        if ((t + i) % 3 == 0) nodes[i].sends[t] = Frame{0, kBroadcast, static_cast<std::uint8_t>(t), FrameKind::App, {static_cast<std::uint8_t>(i)}};
      w.attach(i, &nodes[i]);
    }
    w.advance(10);
    std::vector<std::pair<Tick, Frame>> all;
    for (auto& n : nodes) all.insert(all.end(), n.got.begin(), n.got.end());
    return all;
  };
  EXPECT_EQ(run(17), run(17));
  EXPECT_NE(run(17), run(18));
}
