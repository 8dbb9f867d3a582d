#include <gtest/gtest.h>

#include "minios/fatimg.hpp"
#include "minios/periph.hpp"

using namespace minios;
using namespace minios::periph;

TEST(Board, SysTickEveryPeriod) {
  Board b;
  b.systick_period = 10;
  for (Tick t = 1; t < 10; ++t) EXPECT_TRUE(b.tick(t).empty()) << t;
  EXPECT_EQ(b.tick(10), (std::vector<IrqLine>{{IrqSource::SysTick, 0}}));
}

TEST(Board, UartRxRaisesOnEnqueueTick) {
  Board b;
  b.systick_period = 1000;
  EXPECT_TRUE(b.tick(6).empty());
  b.uart_receive("x");
  EXPECT_EQ(b.tick(7), (std::vector<IrqLine>{{IrqSource::UartRx, 0}}));
  // Still queued, no new empty->nonempty transition.
  EXPECT_TRUE(b.tick(8).empty());
  b.uart_receive("y");
  EXPECT_TRUE(b.tick(9).empty());
  while (b.uart_pop()) {
  }
  b.uart_receive("z");
  EXPECT_EQ(b.tick(11).size(), 1u);
}

TEST(Board, LedIndexOutOfRangeRejected) {
  Board b;
  EXPECT_TRUE(b.set_led(0, true));
  EXPECT_FALSE(b.set_led(4, true));
  EXPECT_TRUE(b.leds()[0]);
  EXPECT_FALSE(b.leds()[3]);
  b.set_led(0, false);
  b.set_led(0, false);
  EXPECT_EQ(b.led_toggles(0), 2u);
}

TEST(Board, ButtonEdgeRaisesOnce) {
  Board b;
  b.systick_period = 1000;
  b.press(2, true);
  EXPECT_EQ(b.tick(1), (std::vector<IrqLine>{{IrqSource::Button, 2}}));
  EXPECT_TRUE(b.tick(2).empty());
  EXPECT_EQ(b.button(2), true);
  EXPECT_FALSE(b.button(9));
}

TEST(Sensors, Scripts) {
  Board b;
  b.light = SensorScript::constant(42);
  b.temp = SensorScript::constant(250);
  EXPECT_EQ(b.sensor_read(Sensor::Light, 5), 42);
  EXPECT_EQ(b.sensor_read(Sensor::Temp, 5), 250);
  b.light = *SensorScript::parse("ramp");
  EXPECT_EQ(b.sensor_read(Sensor::Light, 7), 7);
  EXPECT_EQ(b.sensor_read(Sensor::Light, 107), 6);
  EXPECT_EQ(SensorScript::parse("ramp:200:50")->eval(60), 210);
  EXPECT_FALSE(SensorScript::parse("sine"));
  EXPECT_EQ(SensorScript::parse("const:-5")->eval(3), -5);
}

TEST(Display, TruncatesAndScrolls) {
  Display d;
  d.write(std::string(40, 'a'));
  EXPECT_EQ(d.lines()[0], std::string(32, 'a'));
  for (int i = 0; i < 10; ++i) d.write("\nline" + std::to_string(i));
  EXPECT_EQ(d.cursor_line(), 7u);
  EXPECT_EQ(d.lines()[7], "line9");
  EXPECT_EQ(d.lines()[0], "line2");
}

TEST(BlockDevice, ReadSector) {
  fatimg::ImageBuilder builder;
  builder.add_file("README.TXT", std::string_view("minios"));
  BlockDevice dev(builder.build());
  EXPECT_EQ(dev.sector_count(), 2048u);
  auto s0 = dev.read_sector(0);
  EXPECT_EQ(s0[510], 0x55);
  EXPECT_EQ(s0[511], 0xAA);
  EXPECT_EQ(dev.read_sector(100), dev.read_sector(100));
  EXPECT_THROW(dev.read_sector(dev.sector_count()), DeviceError);
  EXPECT_THROW(BlockDevice(std::vector<std::uint8_t>(100)), DeviceError);
}

TEST(Radio, FiltersByAddress) {
  RadioPort r(3);
  mesh::Frame f;
  f.dst = 4;
  EXPECT_FALSE(r.receive(f));
  f.dst = 3;
  EXPECT_TRUE(r.receive(f));
  f.dst = mesh::kBroadcast;
  EXPECT_TRUE(r.receive(f));
  EXPECT_TRUE(r.take_rx_edge());
  EXPECT_FALSE(r.take_rx_edge());
  EXPECT_TRUE(r.pop_incoming());
  EXPECT_TRUE(r.pop_incoming());
  EXPECT_FALSE(r.pop_incoming());
}

TEST(Board, ReplayIsDeterministic) {
  auto run = [] {
    Board b;
    b.systick_period = 3;
    b.light = SensorScript::ramp(0, 101);
    std::string log;
    for (Tick t = 1; t <= 200; ++t) {
      if (t % 17 == 0) b.uart_receive("k");
      for (auto irq : b.tick(t)) log += to_string(irq) + "@" + std::to_string(t) + " ";
      if (t % 5 == 0) b.uart_write(std::to_string(b.sampled(Sensor::Light)));
    }
    return log + b.uart_output();
  };
  EXPECT_EQ(run(), run());
}
