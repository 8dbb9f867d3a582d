#include <gtest/gtest.h>

#include "minios/hal.hpp"

using namespace minios;
using namespace minios::hal;
using periph::IrqSource;

TEST(Hal, UartWrite) {
  periph::Board b;
  Hal h(b);
  EXPECT_EQ(h.io_write(Device::Uart, "ok"), 2u);
  EXPECT_EQ(b.uart_output(), "ok");
}

TEST(Hal, LedByteEncoding) {
  periph::Board b;
  Hal h(b);
  std::uint8_t on0 = 0x01, on3 = (3 << 1) | 1;
  h.io_write(Device::Led, {&on0, 1});
  h.io_write(Device::Led, {&on3, 1});
  EXPECT_TRUE(b.leds()[0]);
  EXPECT_TRUE(b.leds()[3]);
  std::uint8_t bad = 4 << 1;
  EXPECT_THROW(h.io_write(Device::Led, {&bad, 1}), ContractError);
}

TEST(Hal, CapabilityViolations) {
  periph::Board b;
  Hal h(b);
  EXPECT_THROW(h.io_write(Device::SensorLight, "x"), ContractError);
  EXPECT_THROW(h.io_read(Device::Display, 4), ContractError);
  EXPECT_THROW(h.io_read(Device::Led, 4), ContractError);
  EXPECT_THROW(h.io_write(Device::Button, "x"), ContractError);
}

TEST(Hal, UartReadPolls) {
  periph::Board b;
  Hal h(b);
  EXPECT_TRUE(h.io_read(Device::Uart, 8).empty());
  b.uart_receive("hi");
  auto r = h.io_read(Device::Uart, 8);
  EXPECT_EQ(std::string(r.begin(), r.end()), "hi");
}

TEST(Hal, ButtonAndSensors) {
  periph::Board b;
  Hal h(b);
  b.press(2, true);
  EXPECT_EQ(h.io_read(Device::Button, 1, 2), std::vector<std::uint8_t>{1});
  EXPECT_EQ(h.io_read(Device::Button, 1, 1), std::vector<std::uint8_t>{0});
  b.temp = periph::SensorScript::constant(250);
  b.tick(1);
  EXPECT_EQ(h.io_read(Device::SensorTemp, 4), (std::vector<std::uint8_t>{250, 0, 0, 0}));
}

TEST(Hal, DisplayText) {
  periph::Board b;
  Hal h(b);
  h.io_write(Device::Display, "abc\ndef");
  EXPECT_EQ(b.display().lines()[0], "abc");
  EXPECT_EQ(b.display().lines()[1], "def");
}

TEST(Hal, IrqRegisterReturnsPrevious) {
  periph::Board b;
  Hal h(b);
  int h1 = 0, h2 = 0;
  EXPECT_FALSE(h.irq_register(IrqSource::UartRx, [&](const periph::IrqLine&) { ++h1; }));
  b.uart_receive("x");
  h.dispatch(b.tick(1));
  EXPECT_EQ(h1, 1);
  auto prev = h.irq_register(IrqSource::UartRx, [&](const periph::IrqLine&) { ++h2; });
  ASSERT_TRUE(prev);
  prev(periph::IrqLine{IrqSource::UartRx, 0});
  EXPECT_EQ(h1, 2);
}

TEST(Hal, UnhandledIrqIgnored) {
  periph::Board b;
  Hal h(b);
  b.press(0, true);
  EXPECT_EQ(h.dispatch(b.tick(1)), 0u);
}

TEST(Hal, StatelessAcrossReplacement) {
  periph::Board a, b;
  {
    Hal h(a);
    h.io_write(Device::Uart, "one");
  }
  Hal h2(a);
  h2.io_write(Device::Uart, "two");
  Hal h3(b);
  h3.io_write(Device::Uart, "one");
  h3.io_write(Device::Uart, "two");
  EXPECT_EQ(a.uart_output(), b.uart_output());
}
