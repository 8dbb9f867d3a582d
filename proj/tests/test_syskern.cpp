#include <gtest/gtest.h>

#include "minios/syskern.hpp"

using namespace minios;
using namespace minios::syskern;

TEST(RingBuffer, FifoAndFull) {
  RingBuffer r(4);
  for (std::uint8_t i = 0; i < 4; ++i) EXPECT_TRUE(r.push(i));
  EXPECT_TRUE(r.full());
  EXPECT_FALSE(r.push(9));
  EXPECT_EQ(*r.peek(3), 3);
  for (std::uint8_t i = 0; i < 4; ++i) EXPECT_EQ(r.pop(), i);
  EXPECT_FALSE(r.pop());
}

TEST(RingBuffer, WrapsAround) {
  RingBuffer r(8);
  for (int round = 0; round < 100; ++round) {
    for (int i = 0; i < 5; ++i) r.push(static_cast<std::uint8_t>(round + i));
    for (int i = 0; i < 5; ++i) ASSERT_EQ(r.pop(), static_cast<std::uint8_t>(round + i));
  }
  EXPECT_TRUE(r.empty());
}

TEST(RingBuffer, RejectsOddCapacity) { EXPECT_THROW(RingBuffer(6), std::invalid_argument); }

TEST(Config, ParseAndRoundTrip) {
  auto c = Config::parse("# test\nmodules.memprot=off\nsched.max_threads = 8\nsystick_period=10\nuser.name=alice\n");
  EXPECT_FALSE(c.modules.memprot);
  EXPECT_EQ(c.max_threads, 8u);
  EXPECT_EQ(c.systick_period, 10u);
  EXPECT_EQ(c.username, "alice");
  EXPECT_EQ(Config::parse(c.to_text()), c);
}

TEST(Config, KeyOrderDoesNotMatter) {
  EXPECT_EQ(Config::parse("modules.net=off\nsched.quantum_ticks=3\n"),
            Config::parse("sched.quantum_ticks=3\nmodules.net=off\n"));
}

TEST(Config, Errors) {
  EXPECT_THROW(Config::parse("bogus=1\n"), ConfigError);
  EXPECT_THROW(Config::parse("modules.memprot=maybe\n"), ConfigError);
  EXPECT_THROW(Config::parse("just text\n"), ConfigError);
  try {
    Config::parse("modules.io=on\nnope=1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("config line 2"), std::string::npos);
  }
}

TEST(Config, IoeventsNeedsSched) {
  auto c = Config::parse("modules.sched=off\nmodules.sync=off\n");
  EXPECT_THROW(c.validate(), ConfigError);
  c.modules.ioevents = false;
  EXPECT_NO_THROW(c.validate());
}

TEST(Trace, FormatParseRoundTrip) {
  TraceEvent e{42, "uart", {{"text", "hello world\n\\x"}, {"n", "3"}}};
  auto line = format_event(e);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_EQ(line.rfind("tick 42 uart ", 0), 0u);
  auto back = parse_event(line);
  ASSERT_TRUE(back);
  EXPECT_EQ(*back, e);
}

TEST(Trace, EscapesControlBytes) {
  std::string raw = "a\x01" "b\tc\rd";
  EXPECT_EQ(unescape_value(escape_value(raw)), raw);
  EXPECT_FALSE(parse_event("garbage"));
}

TEST(Trace, CountAndDisable) {
  Trace t;
  t.emit(1, "boot");
  t.emit(2, "sched");
  t.set_enabled(false);
  t.emit(3, "sched");
  EXPECT_EQ(t.count("sched"), 1u);
  EXPECT_EQ(t.events().size(), 2u);
}

TEST(RamLayout, RegionsAreOrdered) {
  RamLayout l;
  EXPECT_LT(l.app_base(), l.app_limit());
  EXPECT_LE(l.arena_base(), l.arena_limit());
  EXPECT_EQ(l.kstack_top(), l.kpage());
  EXPECT_EQ(l.kpage() + vmcu::kKernelPageSize, l.ram_base + l.ram_size);
}

TEST(KernelPage, UsernameTruncatedAndTerminated) {
  vmcu::Memory mem;
  RamLayout l;
  write_username(mem, l.kpage(), "root");
  EXPECT_EQ(read_username(mem, l.kpage()), "root");
  write_username(mem, l.kpage(), std::string(40, 'x'));
  EXPECT_EQ(read_username(mem, l.kpage()), std::string(31, 'x'));
}

TEST(Banner, FixedText) {
  Config c;
  auto a = banner(c);
  EXPECT_EQ(a, banner(c));
  ASSERT_FALSE(a.empty());
  EXPECT_NE(a[0].find("MiniOS"), std::string::npos);
}
