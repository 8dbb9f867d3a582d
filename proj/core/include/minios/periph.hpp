#pragma once

// Virtual board peripherals: serial port, text display, LEDs, buttons,
// scripted sensors, SysTick, block device, and the radio port.

#include <array>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "minios/frame.hpp"
#include "minios/types.hpp"

namespace minios::periph {

enum class IrqSource : std::uint8_t { UartRx, SysTick, RadioRx, Button };

struct IrqLine {
  IrqSource source = IrqSource::SysTick;
  std::uint8_t index = 0;  // button number for IrqSource::Button
  bool operator==(const IrqLine&) const = default;
};

std::string to_string(const IrqLine& irq);

class Display {
 public:
  static constexpr std::size_t kLines = 8;
  static constexpr std::size_t kWidth = 32;

  /// Text with '\n' line breaks. Characters past the width are dropped;
  /// a break on the last line scrolls everything up.
  void write(std::string_view text);
  void clear();

  const std::array<std::string, kLines>& lines() const { return lines_; }
  std::size_t cursor_line() const { return row_; }
  std::uint64_t writes() const { return writes_; }

 private:
  std::array<std::string, kLines> lines_{};
  std::size_t row_ = 0;
  std::uint64_t writes_ = 0;
};

class DeviceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BlockDevice {
 public:
  static constexpr std::size_t kSectorSize = 512;

  BlockDevice() = default;
  /// Image length must be a whole number of sectors.
  explicit BlockDevice(std::vector<std::uint8_t> image);
  static BlockDevice from_file(const std::filesystem::path& path);

  std::uint32_t sector_count() const {
    return static_cast<std::uint32_t>(image_.size() / kSectorSize);
  }
  /// Throws DeviceError when s >= sector_count().
  std::array<std::uint8_t, kSectorSize> read_sector(std::uint32_t s) const;
  std::span<const std::uint8_t> bytes() const { return image_; }

 private:
  std::vector<std::uint8_t> image_;
};

/// Deterministic sensor function of the tick.
struct SensorScript {
  enum class Kind : std::uint8_t { Const, Ramp };
  Kind kind = Kind::Const;
  std::int32_t value = 0;   // Const value, Ramp offset
  std::int32_t modulus = 101;  // Ramp: offset + now mod modulus

  std::int32_t eval(Tick now) const;
  bool operator==(const SensorScript&) const = default;

  static SensorScript constant(std::int32_t v) { return {Kind::Const, v, 1}; }
  static SensorScript ramp(std::int32_t offset, std::int32_t modulus) {
    return {Kind::Ramp, offset, modulus};
  }
  /// "const:N", "ramp" (now mod 101), or "ramp:OFFSET:MOD".
  static std::optional<SensorScript> parse(std::string_view text);
};

enum class Sensor : std::uint8_t { Light, Temp };

class RadioPort {
 public:
  explicit RadioPort(std::uint16_t address = 0) : address_(address) {}

  std::uint16_t address() const { return address_; }
  void set_address(std::uint16_t a) { address_ = a; }

  /// Queues a frame for the medium; the mesh collects it after the tick.
  void send(mesh::Frame f);
  std::vector<mesh::Frame> take_outgoing();

  /// Called by the medium. Frames for other addresses are dropped.
  bool receive(const mesh::Frame& f);
  std::optional<mesh::Frame> pop_incoming();
  bool has_incoming() const { return !rx_.empty(); }

  bool take_rx_edge();

 private:
  std::uint16_t address_;
  std::vector<mesh::Frame> tx_;
  std::deque<mesh::Frame> rx_;
  bool rx_edge_ = false;
};

class Board {
 public:
  static constexpr std::size_t kLeds = 4;
  static constexpr std::size_t kButtons = 4;

  Board();

  // Serial port.
  void uart_receive(std::string_view bytes);
  std::optional<std::uint8_t> uart_pop();
  std::size_t uart_available() const { return uart_rx_.size(); }
  void uart_write(std::string_view bytes) { uart_tx_.append(bytes); }
  const std::string& uart_output() const { return uart_tx_; }
  /// Returns output written since the previous call.
  std::string uart_drain_new();

  Display& display() { return display_; }
  const Display& display() const { return display_; }

  /// Index outside 0..3 is rejected.
  bool set_led(std::size_t index, bool on);
  const std::array<bool, kLeds>& leds() const { return leds_; }
  std::uint64_t led_toggles(std::size_t index) const { return toggles_.at(index); }

  bool press(std::size_t index, bool down);
  std::optional<bool> button(std::size_t index) const;

  SensorScript light;
  SensorScript temp;
  std::int32_t sensor_read(Sensor which, Tick now) const;
  std::int32_t sampled(Sensor which) const {
    return which == Sensor::Light ? sampled_light_ : sampled_temp_;
  }

  BlockDevice block;
  RadioPort radio;
  Tick systick_period = 1;

  /// Advances to tick `now` (strictly increasing) and returns the raised
  /// interrupt lines in source order.
  std::vector<IrqLine> tick(Tick now);
  Tick now() const { return now_; }

 private:
  std::string uart_tx_;
  std::size_t uart_mark_ = 0;
  std::deque<std::uint8_t> uart_rx_;
  bool uart_edge_ = false;
  Display display_;
  std::array<bool, kLeds> leds_{};
  std::array<std::uint64_t, kLeds> toggles_{};
  std::array<bool, kButtons> buttons_{};
  std::array<bool, kButtons> button_edge_{};
  std::int32_t sampled_light_ = 0;
  std::int32_t sampled_temp_ = 0;
  Tick now_ = 0;
};

}  // namespace minios::periph
