#include "minios/memprot.hpp"

#include <algorithm>

namespace minios::memprot {

bool MpuConfig::add(Region r) {
  if (r.size == 0 || count_ == kMaxRegions) return false;
  regions_[count_++] = r;
  return true;
}

bool MpuConfig::operator==(const MpuConfig& o) const {
  return enabled == o.enabled && std::ranges::equal(regions(), o.regions());
}

static std::uint8_t needed(Access a) {
  switch (a) {
    case Access::Read: return perm::R;
    case Access::Write: return perm::W;
    case Access::Execute: return perm::X;
  }
  return perm::R;
}

bool check(const MpuConfig& cfg, Mode mode, Access access, std::uint32_t addr,
           std::uint32_t size) {
  if (mode == Mode::Kernel || !cfg.enabled) return true;
  const std::uint8_t want = needed(access);
  for (const Region& r : cfg.regions()) {
    if ((r.perms & want) == want && r.contains(addr, size)) return true;
  }
  return false;
}

MpuConfig grant_for(const AppLayout& app, StackRegion stack, bool enabled) {
  MpuConfig cfg;
  cfg.enabled = enabled;
  cfg.add({app.base, app.code_size, perm::RX});
  if (app.data_size + app.bss_size > 0)
    cfg.add({app.base + app.code_size, app.data_size + app.bss_size, perm::RW});
  cfg.add({stack.base, stack.bytes, perm::RW});
  return cfg;
}

}  // namespace minios::memprot
