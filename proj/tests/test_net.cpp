#include <gtest/gtest.h>

#include <cstdio>
#include <string>
#include <vector>

#include "minios/net.hpp"
#include "support/fixtures.hpp"
#include "support/trickle_replay.hpp"

using namespace minios;
using namespace minios::net;

namespace {

std::vector<std::uint8_t> pl(std::uint32_t v) { return encode_payload(v, {}); }

}  // namespace

class TrickleSingle : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(TrickleSingle, MatchesOracle) {
  auto expect = fixtures::read_lines("trickle_single_" + std::to_string(GetParam()) + ".txt");
  ASSERT_FALSE(expect.empty());
  EXPECT_EQ(trickle_replay::single(GetParam(), 60000), expect);
}

INSTANTIATE_TEST_SUITE_P(Seeds, TrickleSingle, ::testing::Values(1, 42, 20261016));

TEST(Trickle, TInUpperHalf) {
  Trickle tr({}, 5);
  tr.start(0);
  for (Tick now = 1; now < 200000; ++now) {
    tr.on_tick(now);
    ASSERT_GE(tr.t(), tr.interval() / 2);
    ASSERT_LT(tr.t(), tr.interval());
    ASSERT_GE(tr.interval(), 100u);
    ASSERT_LE(tr.interval(), 25600u);
  }
  EXPECT_EQ(tr.interval(), 25600u);
}

TEST(Trickle, SuppressedWhenHeardK) {
  Trickle tr({}, 9);
  tr.start(0);
  tr.on_frame(pl(0), 1);
  EXPECT_EQ(tr.c(), 1u);
  bool sent = false;
  for (Tick now = 2; now <= 100; ++now) sent |= tr.on_tick(now).has_value();
  EXPECT_FALSE(sent);
  EXPECT_EQ(tr.suppressed(), 1u);
  EXPECT_EQ(tr.c(), 0u);
}

TEST(Trickle, AdoptNewer) {
  Trickle tr({}, 1);
  tr.set_value(3, {1, 2}, 0);
  for (Tick now = 1; now < 1000; ++now) tr.on_tick(now);
  EXPECT_GT(tr.interval(), 100u);
  auto p = encode_payload(7, std::vector<std::uint8_t>{9, 9, 9});
  EXPECT_EQ(tr.on_frame(p, 1000), Disposition::AdoptNewer);
  EXPECT_EQ(tr.version(), 7u);
  EXPECT_EQ(tr.interval(), 100u);
  EXPECT_EQ(tr.data(), (std::vector<std::uint8_t>{9, 9, 9}));
}

TEST(Trickle, OlderResetsInterval) {
  Trickle tr({}, 1);
  tr.set_value(7, {5}, 0);
  for (Tick now = 1; now < 1000; ++now) tr.on_tick(now);
  auto resets = tr.resets();
  EXPECT_EQ(tr.on_frame(pl(3), 1000), Disposition::AnnounceOlderHeard);
  EXPECT_EQ(tr.interval(), 100u);
  EXPECT_EQ(tr.version(), 7u);
  EXPECT_EQ(tr.data(), std::vector<std::uint8_t>{5});
  EXPECT_EQ(tr.resets(), resets + 1);
}

TEST(Trickle, MalformedDropped) {
  Trickle tr({}, 1);
  std::vector<std::uint8_t> shortp{1, 2};
  EXPECT_EQ(tr.on_frame(shortp, 0), Disposition::Malformed);
  EXPECT_EQ(tr.c(), 0u);
}

TEST(Trickle, VersionNeverDecreases) {
  Trickle tr({}, 3);
  tr.start(0);
  mesh::Rng r(11);
  std::uint32_t last = 0;
  for (Tick now = 1; now < 5000; ++now) {
    tr.on_frame(pl(static_cast<std::uint32_t>(r.below(20))), now);
    tr.on_tick(now);
    ASSERT_GE(tr.version(), last);
    last = tr.version();
  }
}

TEST(NetStack, FreshReport) {
  NetStack n({}, 1, 0);
  EXPECT_EQ(n.report(), "tx=0 rx=0 suppressed=0 resets=0 version=0 interval=100");
}

TEST(NetStack, LoneNodeOneInterval) {
  NetStack n({}, 1, 0);
  periph::RadioPort radio(0);
  n.start(0);
  for (Tick now = 1; now <= 100; ++now) n.on_tick(now, radio);
  EXPECT_EQ(n.stats.tx, 1u);
  auto out = radio.take_outgoing();
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].kind, mesh::FrameKind::Trickle);
  EXPECT_EQ(out[0].payload, pl(0));
}

TEST(NetStack, NetWriteLimits) {
  NetStack n({}, 1, 4);
  periph::RadioPort radio(4);
  mesh::Frame f;
  f.payload.assign(101, 0);
  EXPECT_EQ(n.net_write(f, radio), -1);
  f.payload.assign(100, 0);
  EXPECT_EQ(n.net_write(f, radio), 0);
  EXPECT_EQ(n.stats.tx, 1u);
  EXPECT_EQ(radio.take_outgoing()[0].src, 4);
}

TEST(NetStack, RxCountsMalformedAndPassesAppFrames) {
  NetStack n({}, 1, 0);
  mesh::Frame t;
  t.kind = mesh::FrameKind::Trickle;
  t.payload = {1};
  EXPECT_FALSE(n.on_frame(t, 1));
  mesh::Frame a;
  a.payload = {'p'};
  EXPECT_TRUE(n.on_frame(a, 2));
  EXPECT_EQ(n.stats.rx, 2u);
}
