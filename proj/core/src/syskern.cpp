#include "minios/syskern.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

namespace minios::syskern {

RingBuffer::RingBuffer(std::size_t capacity) : buf_(capacity), mask_(capacity - 1) {
  if (capacity == 0 || (capacity & (capacity - 1)) != 0)
    throw std::invalid_argument("ring buffer capacity must be a power of two");
}

bool RingBuffer::push(std::uint8_t b) {
  if (full()) return false;
  buf_[head_++ & mask_] = b;
  return true;
}

std::optional<std::uint8_t> RingBuffer::pop() {
  if (empty()) return std::nullopt;
  return buf_[tail_++ & mask_];
}

std::optional<std::uint8_t> RingBuffer::peek(std::size_t i) const {
  if (i >= size()) return std::nullopt;
  return buf_[(tail_ + i) & mask_];
}

// ---------------------------------------------------------------- config

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_switch(std::string_view key, std::string_view v) {
  if (v == "on" || v == "1" || v == "true") return true;
  if (v == "off" || v == "0" || v == "false") return false;
  throw ConfigError(std::string(key) + ": expected on|off, got '" + std::string(v) + "'");
}

std::uint64_t parse_uint(std::string_view key, std::string_view v, std::uint64_t lo, std::uint64_t hi) {
  std::uint64_t out = 0;
  int base = 10;
  if (v.size() > 2 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X')) {
    v.remove_prefix(2);
    base = 16;
  }
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out, base);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty())
    throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(v) + "'");
  if (out < lo || out > hi)
    throw ConfigError(std::string(key) + ": " + std::to_string(out) + " out of range " + std::to_string(lo) +
                      ".." + std::to_string(hi));
  return out;
}

std::string script_text(const periph::SensorScript& s) {
  if (s.kind == periph::SensorScript::Kind::Const) return "const:" + std::to_string(s.value);
  return "ramp:" + std::to_string(s.value) + ":" + std::to_string(s.modulus);
}

const char* onoff(bool b) { return b ? "on" : "off"; }

}  // namespace

void Config::set(std::string_view key, std::string_view value) {
  const std::string k(key);
  const auto v = trim(value);
  auto sw = [&](bool& b) { b = parse_switch(key, v); };
  if (k == "modules.faultmgr") sw(modules.faultmgr);
  else if (k == "modules.memprot") sw(modules.memprot);
  else if (k == "modules.sched") sw(modules.sched);
  else if (k == "modules.sync") sw(modules.sync);
  else if (k == "modules.io") sw(modules.io);
  else if (k == "modules.ioevents") sw(modules.ioevents);
  else if (k == "modules.net") sw(modules.net);
  else if (k == "modules.fs") sw(modules.fs);
  else if (k == "sched.max_threads") max_threads = parse_uint(key, v, 1, 64);
  else if (k == "sched.quantum_ticks") quantum_ticks = parse_uint(key, v, 1, 1000);
  else if (k == "systick_period") systick_period = parse_uint(key, v, 1, 1000);
  else if (k == "ram_size") {
    ram_size = static_cast<std::uint32_t>(parse_uint(key, v, 64 * 1024, 16 * 1024 * 1024));
    if (ram_size % 4096 != 0) throw ConfigError("ram_size must be a multiple of 4096");
  } else if (k == "net.i_min") net.i_min = parse_uint(key, v, 2, 1'000'000);
  else if (k == "net.doublings") net.doublings = static_cast<std::uint32_t>(parse_uint(key, v, 0, 16));
  else if (k == "net.k") net.k = static_cast<std::uint32_t>(parse_uint(key, v, 1, 1000));
  else if (k == "net.version") net.version = static_cast<std::uint32_t>(parse_uint(key, v, 0, 0xFFFFFFFF));
  else if (k == "net.payload") {
    if (v.size() > 80) throw ConfigError("net.payload longer than 80 bytes");
    net.payload = std::string(v);
  } else if (k == "sensor.light" || k == "sensor.temp") {
    auto s = periph::SensorScript::parse(v);
    if (!s) throw ConfigError(k + ": bad sensor script '" + std::string(v) + "'");
    (k == "sensor.light" ? light : temp) = *s;
  } else if (k == "user.name") {
    if (v.empty() || v.size() > 31) throw ConfigError("user.name must be 1..31 characters");
    username = std::string(v);
  } else {
    throw ConfigError("unknown config key '" + k + "'");
  }
}

Config Config::parse(std::string_view text) {
  Config c;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    try {
      c.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

void Config::validate() const {
  if (modules.ioevents && !(modules.sched && modules.io))
    throw ConfigError("modules.ioevents requires modules.sched and modules.io");
  if (modules.sync && !modules.sched) throw ConfigError("modules.sync requires modules.sched");
}

std::string Config::to_text() const {
  std::ostringstream os;
  os << "modules.faultmgr=" << onoff(modules.faultmgr) << "\n"
     << "modules.memprot=" << onoff(modules.memprot) << "\n"
     << "modules.sched=" << onoff(modules.sched) << "\n"
     << "modules.sync=" << onoff(modules.sync) << "\n"
     << "modules.io=" << onoff(modules.io) << "\n"
     << "modules.ioevents=" << onoff(modules.ioevents) << "\n"
     << "modules.net=" << onoff(modules.net) << "\n"
     << "modules.fs=" << onoff(modules.fs) << "\n"
     << "sched.max_threads=" << max_threads << "\n"
     << "sched.quantum_ticks=" << quantum_ticks << "\n"
     << "systick_period=" << systick_period << "\n"
     << "ram_size=" << ram_size << "\n"
     << "net.i_min=" << net.i_min << "\n"
     << "net.doublings=" << net.doublings << "\n"
     << "net.k=" << net.k << "\n"
     << "net.version=" << net.version << "\n";
  if (!net.payload.empty()) os << "net.payload=" << net.payload << "\n";
  os << "sensor.light=" << script_text(light) << "\n"
     << "sensor.temp=" << script_text(temp) << "\n"
     << "user.name=" << username << "\n";
  return os.str();
}

// ---------------------------------------------------------------- trace

std::string escape_value(std::string_view v) {
  std::string out;
  out.reserve(v.size());
  for (char c : v) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case ' ': out += "\\s"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20 || c == 0x7F) {
          static const char* hex = "0123456789abcdef";
          out += "\\x";
          out += hex[(c >> 4) & 0xF];
          out += hex[c & 0xF];
        } else {
          out += c;
        }
    }
  }
  return out;
}

std::string unescape_value(std::string_view v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != '\\' || i + 1 == v.size()) {
      out += v[i];
      continue;
    }
    const char n = v[++i];
    switch (n) {
      case 's': out += ' '; break;
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'r': out += '\r'; break;
      case 'x':
        if (i + 2 < v.size()) {
          unsigned val = 0;
          std::from_chars(v.data() + i + 1, v.data() + i + 3, val, 16);
          out += static_cast<char>(val);
          i += 2;
        }
        break;
      default: out += n;
    }
  }
  return out;
}

std::string TraceEvent::field(std::string_view key) const {
  for (const auto& [k, v] : fields)
    if (k == key) return v;
  return {};
}

std::string format_event(const TraceEvent& e) {
  std::string line = "tick " + std::to_string(e.tick) + " " + e.kind;
  for (const auto& [k, v] : e.fields) {
    line += ' ';
    line += k;
    line += '=';
    line += escape_value(v);
  }
  return line;
}

std::optional<TraceEvent> parse_event(std::string_view line) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < line.size()) {
    auto j = line.find(' ', i);
    if (j == std::string_view::npos) j = line.size();
    if (j == i) return std::nullopt;  // doubled separator
    words.push_back(line.substr(i, j - i));
    i = j + 1;
  }
  if (!line.empty() && line.back() == ' ') return std::nullopt;
  if (words.size() < 3 || words[0] != "tick") return std::nullopt;
  TraceEvent e;
  auto [p, ec] = std::from_chars(words[1].data(), words[1].data() + words[1].size(), e.tick);
  if (ec != std::errc{} || p != words[1].data() + words[1].size()) return std::nullopt;
  e.kind = std::string(words[2]);
  for (char c : e.kind)
    if (!(std::islower(static_cast<unsigned char>(c)) || c == '_')) return std::nullopt;
  for (std::size_t w = 3; w < words.size(); ++w) {
    const auto eq = words[w].find('=');
    if (eq == 0 || eq == std::string_view::npos) return std::nullopt;
    e.fields.emplace_back(std::string(words[w].substr(0, eq)), unescape_value(words[w].substr(eq + 1)));
  }
  return e;
}

void Trace::emit(Tick tick, std::string kind, std::vector<std::pair<std::string, std::string>> fields) {
  if (!enabled_) return;
  events_.push_back(TraceEvent{tick, std::move(kind), std::move(fields)});
}

std::string Trace::text() const {
  std::string out;
  for (const auto& e : events_) {
    out += format_event(e);
    out += '\n';
  }
  return out;
}

std::size_t Trace::count(std::string_view kind) const {
  return static_cast<std::size_t>(
      std::count_if(events_.begin(), events_.end(), [&](const TraceEvent& e) { return e.kind == kind; }));
}

// ---------------------------------------------------------------- kernel page

std::string read_username(const vmcu::Memory& mem, std::uint32_t kpage_base) {
  std::string out;
  for (std::uint32_t i = 0; i + 1 < kpage::kUsernameSize; ++i) {
    const auto c = mem.load8(kpage_base + kpage::kUsername + i);
    if (c == 0) break;
    out += static_cast<char>(c);
  }
  return out;
}

void write_username(vmcu::Memory& mem, std::uint32_t kpage_base, std::string_view name) {
  for (std::uint32_t i = 0; i < kpage::kUsernameSize; ++i) {
    const std::uint8_t c = i < name.size() && i + 1 < kpage::kUsernameSize ? static_cast<std::uint8_t>(name[i]) : 0;
    mem.store8(kpage_base + kpage::kUsername + i, c);
  }
}

std::vector<std::string> banner(const Config& cfg) {
  std::vector<std::string> out;
  out.push_back("MiniOS 1.0 (vmcu guest ISA, 1 tick = 1 ms = " + std::to_string(kInstructionsPerTick) +
                " instructions)");
  out.push_back("MiniOS cpu: vmcu @ 1 MIPS, ram " + std::to_string(cfg.ram_size / 1024) + " KiB, systick " +
                std::to_string(cfg.systick_period) + " ms");
  out.push_back("MiniOS peripherals: uart display(8x32) leds(4) buttons(4) light temp sdcard radio");
  std::string mods = "MiniOS modules:";
  const std::pair<const char*, bool> list[] = {
      {"faultmgr", cfg.modules.faultmgr}, {"memprot", cfg.modules.memprot}, {"sched", cfg.modules.sched},
      {"sync", cfg.modules.sync},         {"io", cfg.modules.io},           {"ioevents", cfg.modules.ioevents},
      {"net", cfg.modules.net},           {"fs", cfg.modules.fs}};
  for (const auto& [name, on] : list) {
    mods += ' ';
    mods += name;
    mods += on ? "=on" : "=off";
  }
  out.push_back(mods);
  return out;
}

}  // namespace minios::syskern
