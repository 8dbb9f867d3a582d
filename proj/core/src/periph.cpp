#include "minios/periph.hpp"

#include <charconv>
#include <fstream>
#include <iterator>

namespace minios::periph {

std::string to_string(const IrqLine& irq) {
  switch (irq.source) {
    case IrqSource::UartRx: return "UartRx";
    case IrqSource::SysTick: return "SysTick";
    case IrqSource::RadioRx: return "RadioRx";
    case IrqSource::Button: return "Button(" + std::to_string(irq.index) + ")";
  }
  return "?";
}

// ----------------------------------------------------------------- display

void Display::write(std::string_view text) {
  ++writes_;
  for (char c : text) {
    if (c == '\n') {
      if (row_ + 1 < kLines) {
        ++row_;
      } else {
        for (std::size_t i = 1; i < kLines; ++i) lines_[i - 1] = std::move(lines_[i]);
        lines_[kLines - 1].clear();
      }
      continue;
    }
    if (lines_[row_].size() < kWidth) lines_[row_] += c;
  }
}

void Display::clear() {
  for (auto& l : lines_) l.clear();
  row_ = 0;
}

// ------------------------------------------------------------ block device

BlockDevice::BlockDevice(std::vector<std::uint8_t> image) : image_(std::move(image)) {
  if (image_.size() % kSectorSize != 0) throw DeviceError("image size is not a multiple of 512");
}

BlockDevice BlockDevice::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DeviceError("cannot open image " + path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), {}};
  return BlockDevice(std::move(bytes));
}

std::array<std::uint8_t, BlockDevice::kSectorSize> BlockDevice::read_sector(std::uint32_t s) const {
  if (s >= sector_count()) throw DeviceError("sector " + std::to_string(s) + " out of range");
  std::array<std::uint8_t, kSectorSize> out{};
  std::copy_n(image_.begin() + static_cast<std::ptrdiff_t>(s) * kSectorSize, kSectorSize, out.begin());
  return out;
}

// ----------------------------------------------------------------- sensors

std::int32_t SensorScript::eval(Tick now) const {
  if (kind == Kind::Const) return value;
  const auto m = static_cast<Tick>(modulus > 0 ? modulus : 1);
  return value + static_cast<std::int32_t>(now % m);
}

std::optional<SensorScript> SensorScript::parse(std::string_view text) {
  auto num = [](std::string_view s) -> std::optional<std::int32_t> {
    std::int32_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return v;
  };
  if (text.starts_with("const:")) {
    if (auto v = num(text.substr(6))) return constant(*v);
    return std::nullopt;
  }
  if (text == "ramp") return ramp(0, 101);
  if (text.starts_with("ramp:")) {
    auto rest = text.substr(5);
    auto colon = rest.find(':');
    if (colon == std::string_view::npos) return std::nullopt;
    auto off = num(rest.substr(0, colon));
    auto mod = num(rest.substr(colon + 1));
    if (!off || !mod || *mod <= 0) return std::nullopt;
    return ramp(*off, *mod);
  }
  return std::nullopt;
}

// ------------------------------------------------------------------- radio

void RadioPort::send(mesh::Frame f) {
  f.src = address_;
  tx_.push_back(std::move(f));
}

std::vector<mesh::Frame> RadioPort::take_outgoing() {
  std::vector<mesh::Frame> out;
  out.swap(tx_);
  return out;
}

bool RadioPort::receive(const mesh::Frame& f) {
  if (f.dst != address_ && f.dst != mesh::kBroadcast) return false;
  if (rx_.empty()) rx_edge_ = true;
  rx_.push_back(f);
  return true;
}

std::optional<mesh::Frame> RadioPort::pop_incoming() {
  if (rx_.empty()) return std::nullopt;
  mesh::Frame f = std::move(rx_.front());
  rx_.pop_front();
  return f;
}

bool RadioPort::take_rx_edge() {
  const bool e = rx_edge_;
  rx_edge_ = false;
  return e;
}

// ------------------------------------------------------------------- board

Board::Board() : light(SensorScript::constant(42)), temp(SensorScript::constant(250)) {}

void Board::uart_receive(std::string_view bytes) {
  if (bytes.empty()) return;
  if (uart_rx_.empty()) uart_edge_ = true;
  uart_rx_.insert(uart_rx_.end(), bytes.begin(), bytes.end());
}

std::optional<std::uint8_t> Board::uart_pop() {
  if (uart_rx_.empty()) return std::nullopt;
  const std::uint8_t b = uart_rx_.front();
  uart_rx_.pop_front();
  return b;
}

std::string Board::uart_drain_new() {
  std::string out = uart_tx_.substr(uart_mark_);
  uart_mark_ = uart_tx_.size();
  return out;
}

bool Board::set_led(std::size_t index, bool on) {
  if (index >= kLeds) return false;
  if (leds_[index] != on) ++toggles_[index];
  leds_[index] = on;
  return true;
}

bool Board::press(std::size_t index, bool down) {
  if (index >= kButtons) return false;
  if (down && !buttons_[index]) button_edge_[index] = true;
  buttons_[index] = down;
  return true;
}

std::optional<bool> Board::button(std::size_t index) const {
  if (index >= kButtons) return std::nullopt;
  return buttons_[index];
}

std::int32_t Board::sensor_read(Sensor which, Tick now) const {
  if (which == Sensor::Light) {
    const std::int32_t v = light.eval(now);
    return v < 0 ? 0 : (v > 100 ? 100 : v);
  }
  return temp.eval(now);
}

std::vector<IrqLine> Board::tick(Tick now) {
  now_ = now;
  sampled_light_ = sensor_read(Sensor::Light, now);
  sampled_temp_ = sensor_read(Sensor::Temp, now);
  std::vector<IrqLine> raised;
  if (uart_edge_) {
    uart_edge_ = false;
    raised.push_back({IrqSource::UartRx, 0});
  }
  const Tick period = systick_period == 0 ? 1 : systick_period;
  if (now % period == 0) raised.push_back({IrqSource::SysTick, 0});
  if (radio.take_rx_edge()) raised.push_back({IrqSource::RadioRx, 0});
  for (std::size_t i = 0; i < kButtons; ++i) {
    if (button_edge_[i]) {
      button_edge_[i] = false;
      raised.push_back({IrqSource::Button, static_cast<std::uint8_t>(i)});
    }
  }
  return raised;
}

}  // namespace minios::periph
