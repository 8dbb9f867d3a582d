#pragma once

// Hardware abstraction layer: capability-checked IO over the board
// peripherals and one registered callback per interrupt source.
// Holds no peripheral state of its own.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "minios/periph.hpp"

namespace minios::hal {

enum class Device : std::uint8_t { Uart, Display, Led, Button, SensorLight, SensorTemp, Block, Radio };

struct Caps {
  bool read = false;
  bool write = false;
};

Caps caps(Device d);
std::string_view to_string(Device d);

/// Kernel-side misuse (wrong capability, bad index).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

using IrqHandler = std::function<void(const periph::IrqLine&)>;

class Hal {
 public:
  explicit Hal(periph::Board& board) : board_(&board) {}

  /// Display takes text with '\n' breaks; Led takes byte0 = index<<1|state;
  /// Radio sends the bytes as one broadcast frame payload.
  std::size_t io_write(Device d, std::span<const std::uint8_t> bytes);
  std::size_t io_write(Device d, std::string_view text);
  /// Poll read of at most `max` bytes. `index` selects the button or sector.
  /// Sensors return the value as 4 little-endian bytes.
  std::vector<std::uint8_t> io_read(Device d, std::size_t max, std::uint32_t index = 0);

  /// Returns the previous handler (empty if none).
  IrqHandler irq_register(periph::IrqSource src, IrqHandler h);
  /// Runs the handler of each raised line in order; unhandled lines are ignored.
  std::size_t dispatch(const std::vector<periph::IrqLine>& irqs);

  periph::Board& board() { return *board_; }

 private:
  periph::Board* board_;
  std::array<IrqHandler, 4> handlers_{};
};

}  // namespace minios::hal
