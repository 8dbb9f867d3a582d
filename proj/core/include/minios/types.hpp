#pragma once

#include <cstdint>
#include <stdexcept>

namespace minios {

enum class Mode : std::uint8_t { Kernel, User };

enum class Access : std::uint8_t { Read, Write, Execute };

namespace perm {
inline constexpr std::uint8_t R = 1;
inline constexpr std::uint8_t W = 2;
inline constexpr std::uint8_t X = 4;
inline constexpr std::uint8_t RW = R | W;
inline constexpr std::uint8_t RX = R | X;
}  // namespace perm

using Tick = std::uint64_t;

/// Guest instructions executed per simulated millisecond tick.
inline constexpr std::uint32_t kInstructionsPerTick = 1000;

/// Invalid configuration or topology input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace minios
