#pragma once

#include <cstdint>
#include <vector>

namespace minios::mesh {

inline constexpr std::uint16_t kBroadcast = 0xFFFF;
inline constexpr std::size_t kMaxPayload = 100;

/// Trickle frames carry dissemination state; App frames carry net_write data.
enum class FrameKind : std::uint8_t { App, Trickle };

struct Frame {
  std::uint16_t src = 0;
  std::uint16_t dst = kBroadcast;
  std::uint8_t seq = 0;
  FrameKind kind = FrameKind::App;
  std::vector<std::uint8_t> payload;

  bool valid() const { return payload.size() <= kMaxPayload; }
  bool operator==(const Frame&) const = default;
};

}  // namespace minios::mesh
