#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "minios/types.hpp"

namespace minios::memprot {

inline constexpr std::size_t kMaxRegions = 8;

struct Region {
  std::uint32_t base = 0;
  std::uint32_t size = 0;
  std::uint8_t perms = 0;

  bool contains(std::uint32_t addr, std::uint32_t len) const {
    return addr >= base && len <= size && addr - base <= size - len;
  }
  bool operator==(const Region&) const = default;
};

/// Per-thread MPU programming. Up to eight regions, no overlap priorities.
class MpuConfig {
 public:
  bool enabled = false;

  /// Returns false when the table is full or the region is empty.
  bool add(Region r);
  void clear() { count_ = 0; }
  std::span<const Region> regions() const { return {regions_.data(), count_}; }
  std::size_t size() const { return count_; }

  bool operator==(const MpuConfig& o) const;

 private:
  std::array<Region, kMaxRegions> regions_{};
  std::size_t count_ = 0;
};

/// Kernel mode and a disabled MPU always pass; otherwise the whole access
/// must sit inside one region that carries the needed permission.
bool check(const MpuConfig& cfg, Mode mode, Access access, std::uint32_t addr,
           std::uint32_t size);

/// Placement of a loaded application image in guest RAM.
struct AppLayout {
  std::uint32_t base = 0;
  std::uint32_t code_size = 0;
  std::uint32_t data_size = 0;
  std::uint32_t bss_size = 0;

  std::uint32_t total() const { return code_size + data_size + bss_size; }
};

struct StackRegion {
  std::uint32_t base = 0;
  std::uint32_t bytes = 0;
};

/// RX over code, RW over data+bss, RW over the thread's own stack.
MpuConfig grant_for(const AppLayout& app, StackRegion stack, bool enabled = true);

}  // namespace minios::memprot
