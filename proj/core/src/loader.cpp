#include <algorithm>

#include "minios/kernel.hpp"

namespace minios::kernel {

std::optional<std::string> Kernel::load(std::string_view path) {
  if (!booted_) boot(now_);
  if (halted_) return std::string("halted");
  return load_into(0, path, std::nullopt);
}

std::optional<std::uint32_t> Kernel::arena_alloc(std::uint32_t bytes) {
  bytes = (bytes + 7) & ~7u;
  if (bytes == 0 || bytes > ram_.arena_limit() - arena_next_) return std::nullopt;
  const std::uint32_t base = arena_next_;
  arena_next_ += bytes;
  return base;
}

std::optional<std::string> Kernel::load_into(int slot, std::string_view path, std::optional<Tid> parent) {
  if (apps_[slot].used) return std::string(slot == 0 ? "busy" : "no memory");
  if (!fs_) return std::string("not found");

  fatro::DirEntry e;
  try {
    e = fs_->stat(path);
  } catch (const fatro::FsError&) {
    return std::string("not found");
  }
  if (e.is_dir()) return std::string("not found");

  gasm::AppBinary bin;
  try {
    bin = gasm::AppBinary::parse(fs_->read_entry(e, 0, e.size));
  } catch (const gasm::FormatError&) {
    return std::string("bad image");
  } catch (const fatro::FsError&) {
    return std::string("bad image");
  }

  std::uint32_t base = ram_.app_base();
  if (slot == 1) {
    const auto& p = apps_[0].layout;
    base = (p.base + p.total() + 255) & ~255u;
  }
  if (base > ram_.app_limit() || bin.image_size() > ram_.app_limit() - base) return std::string("no memory");

  const std::uint32_t words = std::max<std::uint32_t>(bin.header.min_stack, 16);
  if (words > (ram_.arena_limit() - ram_.arena_base()) / 4) return std::string("no memory");
  const std::uint32_t mark = arena_next_;
  auto stack = arena_alloc(words * 4);
  if (!stack) return std::string("no memory");
  auto tid = sched_.create(abi::kPrioDefault);
  if (!tid) {
    arena_next_ = mark;
    return std::string("no memory");
  }

  mem_.write(base, bin.code);
  mem_.write(base + bin.header.code_size, bin.data);
  mem_.fill(base + bin.header.code_size + bin.header.data_size, bin.header.bss_size, 0);

  LoadedApp& a = apps_[slot];
  a = LoadedApp{};
  a.used = true;
  a.name = e.name;
  a.image = std::move(bin);
  a.layout = a.image.layout(base);
  a.main_tid = *tid;
  a.threads = {*tid};
  a.arena_mark = mark;
  a.waiting_parent = parent;

  auto& tc = sched_.tcb(*tid);
  tc.owner = slot;
  tc.name = "main";
  tc.stack_base = *stack;
  tc.stack_words = words;
  tc.entry = base + a.image.header.entry;
  tc.ctx = {};
  tc.ctx.regs[vmcu::GuestCpu::kPc] = tc.entry;
  tc.ctx.regs[vmcu::GuestCpu::kSp] = *stack + words * 4;
  tc.ctx.regs[vmcu::GuestCpu::kLr] = vmcu::kReturnSentinel;
  tc.ctx.regs[9] = base;
  tc.ctx.psp_limit = *stack;

  trace_.emit(now_, "app_load",
              {{"name", a.name},
               {"slot", std::to_string(slot)},
               {"base", std::to_string(base)},
               {"size", std::to_string(a.layout.total())},
               {"tid", std::to_string(*tid)}});
  return std::nullopt;
}

void Kernel::app_exit(int slot, AppState how, std::int32_t code, std::optional<vmcu::FaultCause> fault) {
  if (slot < 0 || slot > 1 || !apps_[slot].used) return;
  if (slot == 0 && apps_[1].used) {
    apps_[1].waiting_parent.reset();
    app_exit(1, AppState::Killed, abi::kExecKilled);
  }
  LoadedApp& a = apps_[slot];

  std::vector<Tid> dead;
  for (Tid t : a.threads) {
    if (sched_.tcb(t).live()) sched_.kill(t);
    dead.push_back(t);
  }
  const bool disp_serving = disp_tid_ && disp_active_ && disp_app_ == slot;
  if (disp_serving) dead.push_back(*disp_tid_);
  if (loaded_ && std::find(dead.begin(), dead.end(), *loaded_) != dead.end()) loaded_.reset();
  sync_.reclaim(slot, dead);
  if (disp_serving) {
    sched_.park(*disp_tid_);
    disp_active_ = false;
    disp_app_ = -1;
  }
  io_.drop_app_events(slot);
  io_.unregister_app(slot);
  arena_next_ = a.arena_mark;

  trace_.emit(now_, "app_exit",
              {{"name", a.name},
               {"state", how == AppState::Killed ? "killed" : "exited"},
               {"code", std::to_string(code)}});
  exits_.push_back({a.name, how, code, fault});

  const auto parent = a.waiting_parent;
  a = LoadedApp{};

  if (parent && sched_.tcb(*parent).live()) {
    sched_.tcb(*parent).ctx.regs[0] = static_cast<std::uint32_t>(how == AppState::Killed ? abi::kExecKilled : code);
    sched_.make_ready(*parent);
  }
  if (slot == 0 && console_waiting_app_) {
    console_waiting_app_ = false;
    console_needs_prompt_ = true;
    sched_.make_ready(console_tid_);
  }
  if (disp_tid_ && io_.pending() > 0) sched_.signal(*disp_tid_);
}

}  // namespace minios::kernel
