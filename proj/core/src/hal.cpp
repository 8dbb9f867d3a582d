#include "minios/hal.hpp"

#include <string>

namespace minios::hal {

Caps caps(Device d) {
  switch (d) {
    case Device::Uart: return {true, true};
    case Device::Display: return {false, true};
    case Device::Led: return {false, true};
    case Device::Button: return {true, false};
    case Device::SensorLight: return {true, false};
    case Device::SensorTemp: return {true, false};
    case Device::Block: return {true, false};
    case Device::Radio: return {true, true};
  }
  return {};
}

std::string_view to_string(Device d) {
  static constexpr std::string_view names[] = {"Uart", "Display", "Led", "Button",
                                               "SensorLight", "SensorTemp", "Block", "Radio"};
  return names[static_cast<int>(d)];
}

std::size_t Hal::io_write(Device d, std::span<const std::uint8_t> bytes) {
  if (!caps(d).write) throw ContractError(std::string(to_string(d)) + " is not writable");
  periph::Board& b = *board_;
  std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  switch (d) {
    case Device::Uart:
      b.uart_write(text);
      return bytes.size();
    case Device::Display:
      b.display().write(text);
      return bytes.size();
    case Device::Led:
      if (bytes.empty()) return 0;
      if (!b.set_led(bytes[0] >> 1, bytes[0] & 1)) throw ContractError("led index out of range");
      return 1;
    case Device::Radio: {
      mesh::Frame f;
      f.src = b.radio.address();
      f.payload.assign(bytes.begin(), bytes.end());
      if (!f.valid()) throw ContractError("radio payload too large");
      b.radio.send(std::move(f));
      return bytes.size();
    }
    default:
      return 0;
  }
}

std::size_t Hal::io_write(Device d, std::string_view text) {
  return io_write(d, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::uint8_t> Hal::io_read(Device d, std::size_t max, std::uint32_t index) {
  if (!caps(d).read) throw ContractError(std::string(to_string(d)) + " is not readable");
  periph::Board& b = *board_;
  std::vector<std::uint8_t> out;
  auto le32 = [&](std::int32_t v) {
    for (int i = 0; i < 4 && out.size() < max; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  switch (d) {
    case Device::Uart:
      while (out.size() < max) {
        auto c = b.uart_pop();
        if (!c) break;
        out.push_back(*c);
      }
      break;
    case Device::Button: {
      auto v = b.button(index);
      if (!v) throw ContractError("button index out of range");
      if (max > 0) out.push_back(*v ? 1 : 0);
      break;
    }
    case Device::SensorLight: le32(b.sensor_read(periph::Sensor::Light, b.now())); break;
    case Device::SensorTemp: le32(b.sensor_read(periph::Sensor::Temp, b.now())); break;
    case Device::Block: {
      auto s = b.block.read_sector(index);
      out.assign(s.begin(), s.begin() + std::min(max, s.size()));
      break;
    }
    case Device::Radio:
      if (auto f = b.radio.pop_incoming()) {
        out = std::move(f->payload);
        if (out.size() > max) out.resize(max);
      }
      break;
    default:
      break;
  }
  return out;
}

IrqHandler Hal::irq_register(periph::IrqSource src, IrqHandler h) {
  auto& slot = handlers_.at(static_cast<std::size_t>(src));
  IrqHandler prev = std::move(slot);
  slot = std::move(h);
  return prev;
}

std::size_t Hal::dispatch(const std::vector<periph::IrqLine>& irqs) {
  std::size_t n = 0;
  for (const auto& irq : irqs) {
    auto& h = handlers_.at(static_cast<std::size_t>(irq.source));
    if (h) {
      h(irq);
      ++n;
    }
  }
  return n;
}

}  // namespace minios::hal
