#pragma once

// System module pieces shared across the kernel: ring buffer, config,
// trace log, the kernel data page, and the fixed RAM layout.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "minios/periph.hpp"
#include "minios/types.hpp"
#include "minios/vmcu.hpp"

namespace minios::syskern {

/// Byte FIFO with power-of-two capacity. Full pushes are refused.
class RingBuffer {
 public:
  explicit RingBuffer(std::size_t capacity);

  std::size_t capacity() const { return buf_.size(); }
  std::size_t size() const { return head_ - tail_; }
  bool empty() const { return head_ == tail_; }
  bool full() const { return size() == capacity(); }

  bool push(std::uint8_t b);
  std::optional<std::uint8_t> pop();
  std::optional<std::uint8_t> peek(std::size_t i = 0) const;
  void clear() { head_ = tail_ = 0; }

 private:
  std::vector<std::uint8_t> buf_;
  std::size_t mask_;
  std::size_t head_ = 0;  // free-running; index with mask_
  std::size_t tail_ = 0;
};

struct Modules {
  bool faultmgr = true;
  bool memprot = true;
  bool sched = true;
  bool sync = true;
  bool io = true;
  bool ioevents = true;
  bool net = true;
  bool fs = true;
  bool operator==(const Modules&) const = default;
};

struct NetConfig {
  Tick i_min = 100;
  std::uint32_t doublings = 8;
  std::uint32_t k = 1;
  std::uint32_t version = 0;
  std::string payload;
  bool operator==(const NetConfig&) const = default;
};

struct Config {
  Modules modules;
  std::size_t max_threads = 16;
  Tick quantum_ticks = 5;
  Tick systick_period = 1;
  std::uint32_t ram_size = vmcu::kDefaultRamSize;
  NetConfig net;
  periph::SensorScript light = periph::SensorScript::constant(42);
  periph::SensorScript temp = periph::SensorScript::constant(250);
  std::string username = "root";

  /// key=value lines, '#' comments. Unknown keys and bad values throw.
  static Config parse(std::string_view text);
  void set(std::string_view key, std::string_view value);
  /// Dependency rules between modules; throws ConfigError.
  void validate() const;
  std::string to_text() const;

  bool operator==(const Config&) const = default;
};

// ---------------------------------------------------------------- trace

struct TraceEvent {
  Tick tick = 0;
  std::string kind;
  std::vector<std::pair<std::string, std::string>> fields;

  bool operator==(const TraceEvent&) const = default;
  std::string field(std::string_view key) const;
};

/// "tick <n> <kind> key=value ..." with backslash escapes in values
/// (\\, \s for space, \n, \t, \r).
std::string format_event(const TraceEvent& e);
std::optional<TraceEvent> parse_event(std::string_view line);
std::string escape_value(std::string_view v);
std::string unescape_value(std::string_view v);

class Trace {
 public:
  void emit(Tick tick, std::string kind, std::vector<std::pair<std::string, std::string>> fields = {});
  const std::vector<TraceEvent>& events() const { return events_; }
  std::string text() const;
  std::size_t count(std::string_view kind) const;
  void set_enabled(bool on) { enabled_ = on; }
  bool enabled() const { return enabled_; }

 private:
  std::vector<TraceEvent> events_;
  bool enabled_ = true;
};

// ---------------------------------------------------------------- memory

/// Fixed placement of everything in guest RAM.
struct RamLayout {
  std::uint32_t ram_base = vmcu::kRamBase;
  std::uint32_t ram_size = vmcu::kDefaultRamSize;

  std::uint32_t app_base() const { return ram_base; }
  std::uint32_t app_limit() const { return ram_base + ram_size / 4 * 3; }
  std::uint32_t arena_base() const { return app_limit(); }
  std::uint32_t arena_limit() const { return kstack_base(); }
  std::uint32_t kstack_base() const { return kpage() - kKernelStack; }
  std::uint32_t kstack_top() const { return kpage(); }
  std::uint32_t kpage() const { return ram_base + ram_size - vmcu::kKernelPageSize; }

  static constexpr std::uint32_t kKernelStack = 2048;
};

namespace kpage {
inline constexpr std::uint32_t kUsername = 0;
inline constexpr std::uint32_t kUsernameSize = 32;
inline constexpr std::uint32_t kBootCount = 32;
}  // namespace kpage

/// Reads the zero-terminated username (at most 31 characters).
std::string read_username(const vmcu::Memory& mem, std::uint32_t kpage_base);
void write_username(vmcu::Memory& mem, std::uint32_t kpage_base, std::string_view name);

/// Boot banner lines, fixed text plus config-derived fields.
std::vector<std::string> banner(const Config& cfg);

}  // namespace minios::syskern
