#include "minios/io.hpp"

#include <algorithm>

namespace minios::io {

std::optional<Event> event_from_id(std::uint32_t id) {
  if (id == 0) return Event::UartLine;
  if (id == 1) return Event::NetworkFrame;
  return std::nullopt;
}

std::size_t IoBuffer::push(std::span<const std::uint8_t> bytes) {
  std::size_t stored = 0;
  for (auto b : bytes) {
    if (ring_.push(b))
      ++stored;
    else
      ++overflow_;
  }
  bytes_in_ += stored;
  return stored;
}

bool IoBuffer::has_line() const {
  if (ring_.full()) return true;
  for (std::size_t i = 0; i < ring_.size(); ++i)
    if (*ring_.peek(i) == '\n') return true;
  return false;
}

std::optional<std::string> IoBuffer::take_line() {
  if (!has_line()) return std::nullopt;
  std::string out;
  while (auto b = ring_.pop()) {
    ++bytes_out_;
    if (*b == '\n') break;
    out += static_cast<char>(*b);
  }
  if (!out.empty() && out.back() == '\r') out.pop_back();
  return out;
}

std::size_t IoBuffer::read(std::span<std::uint8_t> out) {
  std::size_t n = 0;
  while (n < out.size()) {
    auto b = ring_.pop();
    if (!b) break;
    out[n++] = *b;
  }
  bytes_out_ += n;
  return n;
}

std::optional<std::uint32_t> IoManager::handler(int app, Event e) const {
  auto it = regs_.find({app, e});
  if (it == regs_.end()) return std::nullopt;
  return it->second;
}

void IoManager::unregister_app(int app) {
  std::erase_if(regs_, [&](const auto& kv) { return kv.first.first == app; });
}

std::optional<PendingEvent> IoManager::next() {
  if (queue_.empty()) return std::nullopt;
  auto ev = std::move(queue_.front());
  queue_.pop_front();
  return ev;
}

void IoManager::drop_app_events(int app) {
  std::erase_if(queue_, [&](const PendingEvent& e) { return e.app == app; });
}

}  // namespace minios::io
