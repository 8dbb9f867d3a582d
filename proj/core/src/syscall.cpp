#include <algorithm>
#include <cctype>

#include "minios/kernel.hpp"

namespace minios::kernel {

namespace {

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string_view syscall_name(std::uint32_t n) {
  if (n < abi::kSysCount) return abi::kSyscalls[n].name;
  return "?";
}

}  // namespace

void Kernel::on_trap(Tid t, std::uint32_t svc) {
  vmcu::return_to_user(cpu_);
  auto& tc = sched_.tcb(t);
  tc.ctx = sched::save_context(cpu_);
  loaded_.reset();
  if (svc == vmcu::kSentinelTrap) {
    on_thread_return(t);
    return;
  }
  syscall(t, svc, tc.ctx);
  if (halted_) return;
  if (sched_.current() == t) sched_.preempt_if_higher();
}

void Kernel::on_thread_return(Tid t) {
  if (disp_tid_ && t == *disp_tid_) {
    trace_.emit(now_, "ioevent_done", {{"app", std::to_string(disp_app_)}});
    disp_active_ = false;
    disp_app_ = -1;
    ++io_.handlers_run;
    return;
  }
  const int app = sched_.tcb(t).owner;
  sched_.exit_current();
  if (app < 0 || !apps_[app].used) return;
  const auto& threads = apps_[app].threads;
  const bool any_live = std::any_of(threads.begin(), threads.end(), [&](Tid x) { return sched_.tcb(x).live(); });
  if (!any_live) app_exit(app, AppState::Exited, 0);
}

bool Kernel::user_ok(Tid t, std::uint32_t addr, std::uint32_t len, Access access) const {
  if (len == 0) return true;
  if (cfg_.modules.memprot) return memprot::check(grant(t), Mode::User, access, addr, len);
  return mem_.map().in_ram(addr, len);
}

std::optional<std::string> Kernel::user_string(Tid t, std::uint32_t addr, std::uint32_t max) {
  std::string out;
  for (std::uint32_t i = 0; i < max; ++i) {
    if (!user_ok(t, addr + i, 1, Access::Read)) return std::nullopt;
    const char c = static_cast<char>(mem_.load8(addr + i));
    if (c == 0) break;
    out += c;
  }
  return out;
}

void Kernel::user_fault(Tid t, std::uint32_t addr, std::uint32_t svc_pc) {
  on_fault(t, vmcu::FaultCause{vmcu::FaultKind::SegFault, addr, svc_pc});
}

void Kernel::display_put(std::string_view text) {
  for (char c : text) {
    if (c != '\n') display_line_ += c;
    if (c == '\n' || display_line_.size() == kDisplayLine) {
      hal_.io_write(hal::Device::Display, display_line_ + "\n");
      display_line_.clear();
    }
  }
}

std::int32_t Kernel::sys_thread_create(Tid t, const sched::Context& ctx) {
  const std::uint32_t entry = ctx.regs[0], arg = ctx.regs[1], words = ctx.regs[2], prio = ctx.regs[3];
  if (!cfg_.modules.sched) return abi::kEnosys;
  if (words == 0) return abi::kErrNoStack;
  if (prio > abi::kPrioMax) return abi::kErr;
  const int app = app_of(t);
  if (app < 0) return abi::kErr;
  if (words > (ram_.arena_limit() - ram_.arena_base()) / 4) return abi::kErrNoStack;
  const std::uint32_t mark = arena_next_;
  auto stack = arena_alloc(words * 4);
  if (!stack) return abi::kErrNoStack;
  auto nt = sched_.create(static_cast<std::uint8_t>(prio));
  if (!nt) {
    arena_next_ = mark;
    return abi::kErr;
  }
  auto& tc = sched_.tcb(*nt);
  tc.owner = app;
  tc.stack_base = *stack;
  tc.stack_words = words;
  tc.entry = entry;
  tc.arg = arg;
  tc.ctx = {};
  tc.ctx.regs[0] = arg;
  tc.ctx.regs[vmcu::GuestCpu::kPc] = entry;
  tc.ctx.regs[vmcu::GuestCpu::kSp] = *stack + words * 4;
  tc.ctx.regs[vmcu::GuestCpu::kLr] = vmcu::kReturnSentinel;
  tc.ctx.regs[9] = apps_[app].layout.base;
  tc.ctx.psp_limit = *stack;
  apps_[app].threads.push_back(*nt);
  return static_cast<std::int32_t>(*nt);
}

std::int32_t Kernel::sys_fs_open(int app, const std::string& path) {
  fatro::DirEntry e;
  try {
    e = fs_->stat(path);
  } catch (const fatro::FsError&) {
    return abi::kErr;
  }
  if (e.is_dir()) return abi::kErr;
  auto& fds = apps_[app].fds;
  for (std::size_t i = 0; i < fds.size(); ++i) {
    if (!fds[i].used) {
      fds[i] = {true, e, 0};
      return static_cast<std::int32_t>(i);
    }
  }
  return abi::kErr;
}

std::int32_t Kernel::sys_execv(Tid t, const std::string& path, bool& blocked) {
  if (app_of(t) != 0) return abi::kErr;
  if (load_into(1, upper(path), t)) return abi::kErr;
  sched_.block();
  blocked = true;
  return 0;
}

void Kernel::syscall(Tid t, std::uint32_t n, sched::Context& ctx) {
  const std::uint32_t a0 = ctx.regs[0], a1 = ctx.regs[1], a2 = ctx.regs[2];
  const std::uint32_t svc_pc = ctx.regs[vmcu::GuestCpu::kPc] - 4;
  const int app = app_of(t);
  std::int32_t ret = 0;
  bool blocked = false;
  const bool have_sync = cfg_.modules.sync && cfg_.modules.sched;

  auto bytes_at = [&](std::uint32_t addr, std::uint32_t len) {
    std::vector<std::uint8_t> buf(len);
    mem_.read(addr, buf);
    return buf;
  };
  auto sync_result = [&](sync::Outcome o) {
    if (o.blocked) {
      sched_.block();
      blocked = true;
    }
    return o.r0;
  };
  auto fd_ok = [&](std::uint32_t fd) { return app >= 0 && fd < kMaxFds && apps_[app].fds[fd].used; };

  switch (n) {
    case abi::sys::Exit:
      trace_.emit(now_, "syscall", {{"tid", std::to_string(t)}, {"name", "exit"}, {"code", std::to_string(static_cast<std::int32_t>(a0))}});
      app_exit(app, AppState::Exited, static_cast<std::int32_t>(a0));
      return;
    case abi::sys::UsbWrite: {
      if (!user_ok(t, a0, a1, Access::Read)) return user_fault(t, a0, svc_pc);
      ret = static_cast<std::int32_t>(hal_.io_write(hal::Device::Uart, bytes_at(a0, a1)));
      break;
    }
    case abi::sys::DisplayWrite: {
      if (!user_ok(t, a0, a1, Access::Read)) return user_fault(t, a0, svc_pc);
      auto b = bytes_at(a0, a1);
      display_put({reinterpret_cast<const char*>(b.data()), b.size()});
      ret = static_cast<std::int32_t>(a1);
      break;
    }
    case abi::sys::LedWrite: {
      if (a0 >= periph::Board::kLeds) {
        ret = abi::kErr;
        break;
      }
      const std::uint8_t v = static_cast<std::uint8_t>((a0 << 1) | (a1 ? 1 : 0));
      hal_.io_write(hal::Device::Led, std::span<const std::uint8_t>(&v, 1));
      trace_.emit(now_, "led", {{"index", std::to_string(a0)}, {"state", a1 ? "1" : "0"}});
      break;
    }
    case abi::sys::ButtonRead:
      ret = a0 >= periph::Board::kButtons ? abi::kErr : hal_.io_read(hal::Device::Button, 1, a0).at(0);
      break;
    case abi::sys::SensorRead: {
      if (a0 > abi::kSensorTemp) {
        ret = abi::kErr;
        break;
      }
      auto b = hal_.io_read(a0 == abi::kSensorLight ? hal::Device::SensorLight : hal::Device::SensorTemp, 4);
      ret = static_cast<std::int32_t>(b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24));
      break;
    }
    case abi::sys::ThreadCreate:
      ret = sys_thread_create(t, ctx);
      break;
    case abi::sys::ThreadSleep:
      if (a0 == 0)
        sched_.yield();
      else
        sched_.sleep_until(now_ + a0);
      break;
    case abi::sys::ThreadYield:
      sched_.yield();
      break;
    case abi::sys::ThreadSetPriority:
      ret = cfg_.modules.sched ? sched_.set_priority(t, static_cast<std::int64_t>(a0)) : abi::kEnosys;
      break;
    case abi::sys::ThreadSignal:
      if (!cfg_.modules.sched)
        ret = abi::kEnosys;
      else if (a0 < sched_.guest_slots() && sched_.tcb(a0).owner == app && app >= 0)
        ret = sched_.signal(a0);
      else
        ret = abi::kErr;
      break;
    case abi::sys::ThreadWait:
      if (!cfg_.modules.sched) {
        ret = abi::kEnosys;
      } else if (sched_.wait_signal()) {
        blocked = true;
      }
      break;
    case abi::sys::LockCreate: ret = have_sync ? sync_.lock_create(app).r0 : abi::kEnosys; break;
    case abi::sys::LockAcquire: ret = have_sync ? sync_result(sync_.lock_acquire(a0, t)) : abi::kEnosys; break;
    case abi::sys::LockRelease: ret = have_sync ? sync_result(sync_.lock_release(a0, t)) : abi::kEnosys; break;
    case abi::sys::SemCreate:
      ret = have_sync ? sync_.sem_create(app, static_cast<std::int32_t>(a0)).r0 : abi::kEnosys;
      break;
    case abi::sys::SemWait: ret = have_sync ? sync_result(sync_.sem_wait(a0, t)) : abi::kEnosys; break;
    case abi::sys::SemPost: ret = have_sync ? sync_result(sync_.sem_post(a0, t)) : abi::kEnosys; break;
    case abi::sys::MonEnter: ret = have_sync ? sync_result(sync_.mon_enter(a0, t)) : abi::kEnosys; break;
    case abi::sys::MonExit: ret = have_sync ? sync_result(sync_.mon_exit(a0, t)) : abi::kEnosys; break;
    case abi::sys::MonWait: ret = have_sync ? sync_result(sync_.mon_wait(a0, t)) : abi::kEnosys; break;
    case abi::sys::MonNotify: ret = have_sync ? sync_result(sync_.mon_notify(a0, t)) : abi::kEnosys; break;
    case abi::sys::BarrierCreate:
      ret = have_sync ? sync_.barrier_create(app, static_cast<std::int32_t>(a0)).r0 : abi::kEnosys;
      break;
    case abi::sys::BarrierWait: ret = have_sync ? sync_result(sync_.barrier_wait(a0, t)) : abi::kEnosys; break;
    case abi::sys::FsOpen: {
      if (!fs_) {
        ret = abi::kEnosys;
        break;
      }
      auto path = user_string(t, a0, 128);
      if (!path) return user_fault(t, a0, svc_pc);
      ret = sys_fs_open(app, *path);
      break;
    }
    case abi::sys::FsRead: {
      if (!fs_) {
        ret = abi::kEnosys;
        break;
      }
      if (!fd_ok(a0)) {
        ret = abi::kErr;
        break;
      }
      if (!user_ok(t, a1, a2, Access::Write)) return user_fault(t, a1, svc_pc);
      auto& f = apps_[app].fds[a0];
      auto data = fs_->read_entry(f.entry, f.offset, a2);
      mem_.write(a1, data);
      f.offset += static_cast<std::uint32_t>(data.size());
      ret = static_cast<std::int32_t>(data.size());
      break;
    }
    case abi::sys::FsClose:
      if (!fs_) {
        ret = abi::kEnosys;
      } else if (!fd_ok(a0)) {
        ret = abi::kErr;
      } else {
        apps_[app].fds[a0] = {};
      }
      break;
    case abi::sys::FsReaddir: {
      if (!fs_) {
        ret = abi::kEnosys;
        break;
      }
      std::string path;
      if (a0 != 0) {
        auto p = user_string(t, a0, 128);
        if (!p) return user_fault(t, a0, svc_pc);
        path = *p;
      }
      std::string text;
      try {
        for (const auto& e : fs_->readdir(path)) text += e.name + "\n";
      } catch (const fatro::FsError&) {
        ret = abi::kErr;
        break;
      }
      const auto len = std::min<std::uint32_t>(a2, static_cast<std::uint32_t>(text.size()));
      if (!user_ok(t, a1, len, Access::Write)) return user_fault(t, a1, svc_pc);
      mem_.write(a1, {reinterpret_cast<const std::uint8_t*>(text.data()), len});
      ret = static_cast<std::int32_t>(len);
      break;
    }
    case abi::sys::NetWrite: {
      if (!net_) {
        ret = abi::kEnosys;
        break;
      }
      if (!user_ok(t, a0, abi::netframe::kSize, Access::Read)) return user_fault(t, a0, svc_pc);
      auto raw = bytes_at(a0, abi::netframe::kSize);
      const std::uint32_t len = raw[abi::netframe::kLen];
      if (len > abi::netframe::kMaxPayload) {
        ret = abi::kErr;
        break;
      }
      mesh::Frame f;
      f.dst = static_cast<std::uint16_t>(raw[abi::netframe::kDst] | (raw[abi::netframe::kDst + 1] << 8));
      f.seq = raw[abi::netframe::kSeq];
      f.payload.assign(raw.begin() + abi::netframe::kPayload, raw.begin() + abi::netframe::kPayload + len);
      ret = net_->net_write(std::move(f), board_.radio);
      break;
    }
    case abi::sys::IoeventRegister: {
      if (!disp_tid_) {
        ret = abi::kEnosys;
        break;
      }
      auto ev = io::event_from_id(a0);
      if (!ev || app < 0) {
        ret = abi::kErr;
        break;
      }
      io_.register_handler(app, *ev, a1);
      if (*ev == io::Event::UartLine) route_uart_lines();
      break;
    }
    case abi::sys::Execv: {
      auto path = user_string(t, a0, 128);
      if (!path) return user_fault(t, a0, svc_pc);
      ret = sys_execv(t, *path, blocked);
      break;
    }
    default:
      ret = abi::kEnosys;
      break;
  }

  if (!halted_) {
    auto& tc = sched_.tcb(t);
    if (!blocked || n == abi::sys::ThreadWait) tc.ctx.regs[0] = static_cast<std::uint32_t>(ret);
    trace_.emit(now_, "syscall",
                {{"tid", std::to_string(t)},
                 {"name", std::string(syscall_name(n))},
                 {"r0", blocked ? std::string("blocked") : std::to_string(ret)}});
  }
}

}  // namespace minios::kernel
