#pragma once

// IO manager and IO event dispatcher state: the UART input buffer,
// per-app event registrations, and the queue of events waiting for the
// dispatcher thread.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "minios/frame.hpp"
#include "minios/syskern.hpp"

namespace minios::io {

inline constexpr std::size_t kUartBufferBytes = 1024;

enum class Event : std::uint8_t { UartLine = 0, NetworkFrame = 1 };

std::optional<Event> event_from_id(std::uint32_t id);

/// Drop-new input buffer: bytes that do not fit are counted, not stored.
class IoBuffer {
 public:
  explicit IoBuffer(std::size_t capacity = kUartBufferBytes) : ring_(capacity) {}

  /// Returns how many bytes were stored.
  std::size_t push(std::span<const std::uint8_t> bytes);
  /// Pops one '\n'-terminated line (newline stripped). A full buffer with
  /// no newline is returned whole so input cannot wedge.
  std::optional<std::string> take_line();
  std::size_t read(std::span<std::uint8_t> out);

  std::size_t size() const { return ring_.size(); }
  std::size_t capacity() const { return ring_.capacity(); }
  std::uint64_t overflow() const { return overflow_; }
  std::uint64_t bytes_in() const { return bytes_in_; }
  std::uint64_t bytes_out() const { return bytes_out_; }
  bool has_line() const;
  void clear() { ring_.clear(); }

 private:
  syskern::RingBuffer ring_;
  std::uint64_t overflow_ = 0;
  std::uint64_t bytes_in_ = 0;
  std::uint64_t bytes_out_ = 0;
};

struct PendingEvent {
  Event kind = Event::UartLine;
  int app = -1;
  std::uint32_t handler = 0;
  std::string line;
  mesh::Frame frame;
};

class IoManager {
 public:
  IoBuffer uart;

  /// Interrupt path: append to the UART buffer.
  std::size_t on_rx_interrupt(std::span<const std::uint8_t> bytes) { return uart.push(bytes); }

  /// One handler per event per app; re-registering replaces it.
  void register_handler(int app, Event e, std::uint32_t handler) { regs_[{app, e}] = handler; }
  std::optional<std::uint32_t> handler(int app, Event e) const;
  void unregister_app(int app);

  void post(PendingEvent ev) { queue_.push_back(std::move(ev)); }
  std::optional<PendingEvent> next();
  std::size_t pending() const { return queue_.size(); }
  void drop_app_events(int app);

  std::uint64_t handlers_run = 0;

 private:
  std::map<std::pair<int, Event>, std::uint32_t> regs_;
  std::deque<PendingEvent> queue_;
};

}  // namespace minios::io
