#include "minios/kernel.hpp"

#include <cstdio>

namespace minios::kernel {

namespace {

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

}  // namespace

Kernel::Kernel(syskern::Config cfg, periph::BlockDevice disk, std::uint16_t node_id, std::uint64_t seed)
    : cfg_(std::move(cfg)),
      node_id_(node_id),
      seed_(seed),
      hal_(board_),
      ram_{vmcu::kRamBase, cfg_.ram_size},
      mem_(cfg_.ram_size),
      sched_(cfg_.max_threads, cfg_.quantum_ticks),
      sync_(sched_) {
  cfg_.validate();
  board_.block = std::move(disk);
  board_.radio.set_address(node_id);
  board_.systick_period = cfg_.systick_period;
  board_.light = cfg_.light;
  board_.temp = cfg_.temp;
  arena_next_ = ram_.arena_base() + kDispatcherStack;
}

void Kernel::boot(Tick now) {
  if (booted_) throw hal::ContractError("kernel already booted");
  booted_ = true;
  now_ = now;
  sched_.set_now(now);
  trace_.emit(now, "boot", {{"node", std::to_string(node_id_)}, {"seed", std::to_string(seed_)}});

  install_irqs();
  syskern::write_username(mem_, ram_.kpage(), cfg_.username);
  mem_.store32(ram_.kpage() + syskern::kpage::kBootCount, mem_.load32(ram_.kpage() + syskern::kpage::kBootCount) + 1);

  for (const auto& line : syskern::banner(cfg_)) console_print(line + "\n");

  if (cfg_.modules.fs) {
    try {
      fs_.emplace(fatro::FatVolume::mount(board_.block));
    } catch (const fatro::FsError&) {
      panic("no filesystem");
      end_of_tick();
      return;
    }
    const auto& g = fs_->geometry();
    console_print(std::string("mounted ") + (g.type == fatro::FatType::Fat12 ? "FAT12" : "FAT16") + " volume " +
                  fs_->volume_label() + " (" + std::to_string(g.cluster_count) + " clusters)\n");
  }

  if (cfg_.modules.net) {
    net::TrickleParams p{cfg_.net.i_min, cfg_.net.doublings, cfg_.net.k};
    net_ = std::make_unique<net::NetStack>(p, net::node_seed(seed_, node_id_), node_id_);
    net_->trickle.init(cfg_.net.version, {cfg_.net.payload.begin(), cfg_.net.payload.end()});
    net_->start(now);
  }

  sched_.set_observer([this](const sched::Decision& d) {
    trace_.emit(d.now, "sched",
                {{"prev", d.prev ? std::to_string(*d.prev) : "-"},
                 {"next", std::to_string(d.next)},
                 {"prio", std::to_string(d.next_priority)},
                 {"reason", d.reason}});
  });
  console_tid_ = sched_.create_kernel(kConsolePriority, "console");
  if (cfg_.modules.ioevents) disp_tid_ = sched_.create_kernel(kDispatcherPriority, "ioevents");
  end_of_tick();
}

void Kernel::install_irqs() {
  using periph::IrqSource;
  hal_.irq_register(IrqSource::UartRx, [this](const periph::IrqLine&) { on_uart_irq(); });
  hal_.irq_register(IrqSource::SysTick, [this](const periph::IrqLine&) { sched_.on_systick(now_); });
  hal_.irq_register(IrqSource::RadioRx, [this](const periph::IrqLine&) { on_radio_irq(); });
}

void Kernel::deliver(const mesh::Frame& f) { board_.radio.receive(f); }

std::vector<mesh::Frame> Kernel::take_outgoing() {
  auto out = board_.radio.take_outgoing();
  for (const auto& f : out)
    trace_.emit(now_, "net_tx",
                {{"kind", f.kind == mesh::FrameKind::Trickle ? "trickle" : "app"},
                 {"dst", std::to_string(f.dst)},
                 {"len", std::to_string(f.payload.size())}});
  return out;
}

void Kernel::tick(Tick now) {
  if (!booted_) boot(now);
  if (halted_) {
    while (board_.radio.pop_incoming()) {
    }
    return;
  }
  now_ = now;
  sched_.set_now(now);
  hal_.dispatch(board_.tick(now));
  if (net_ && !halted_) net_->on_tick(now, board_.radio);
  if (!halted_) run_threads();
  end_of_tick();
}

void Kernel::on_uart_irq() {
  auto bytes = hal_.io_read(hal::Device::Uart, SIZE_MAX);
  io_.on_rx_interrupt(bytes);
  route_uart_lines();
}

void Kernel::route_uart_lines() {
  int target = -1;
  if (disp_tid_) {
    for (int s : {1, 0})
      if (apps_[s].used && io_.handler(s, io::Event::UartLine)) {
        target = s;
        break;
      }
  }
  if (target >= 0) {
    bool any = false;
    while (auto line = io_.uart.take_line()) {
      io::PendingEvent ev;
      ev.kind = io::Event::UartLine;
      ev.app = target;
      ev.handler = *io_.handler(target, io::Event::UartLine);
      ev.line = std::move(*line);
      io_.post(std::move(ev));
      any = true;
    }
    if (any) sched_.signal(*disp_tid_);
  } else if (io_.uart.has_line()) {
    sched_.signal(console_tid_);
  }
}

void Kernel::on_radio_irq() {
  while (auto f = board_.radio.pop_incoming()) {
    trace_.emit(now_, "net_rx",
                {{"kind", f->kind == mesh::FrameKind::Trickle ? "trickle" : "app"},
                 {"src", std::to_string(f->src)},
                 {"len", std::to_string(f->payload.size())}});
    if (!net_) continue;
    const auto before = net_->trickle.version();
    auto app_frame = net_->on_frame(*f, now_);
    if (net_->trickle.version() != before)
      trace_.emit(now_, "trickle", {{"version", std::to_string(net_->trickle.version())}});
    if (!app_frame || !disp_tid_) continue;
    for (int s : {1, 0}) {
      if (!apps_[s].used) continue;
      auto h = io_.handler(s, io::Event::NetworkFrame);
      if (!h) continue;
      io::PendingEvent ev;
      ev.kind = io::Event::NetworkFrame;
      ev.app = s;
      ev.handler = *h;
      ev.frame = std::move(*app_frame);
      io_.post(std::move(ev));
      sched_.signal(*disp_tid_);
      break;
    }
  }
}

void Kernel::run_threads() {
  std::uint64_t budget = kInstructionsPerTick;
  for (int guard = 0; budget > 0 && !halted_ && guard < 100000; ++guard) {
    auto t = sched_.dispatch();
    if (!t) break;
    if (*t == console_tid_) {
      console_step();
      continue;
    }
    if (disp_tid_ && *t == *disp_tid_ && !disp_active_) {
      dispatcher_step();
      continue;
    }
    run_guest(*t, budget);
  }
}

void Kernel::unload_cpu() {
  if (!loaded_) return;
  auto& tc = sched_.tcb(*loaded_);
  if (tc.live()) tc.ctx = sched::save_context(cpu_);
  loaded_.reset();
}

void Kernel::switch_to(Tid t) {
  if (loaded_ == t) return;
  unload_cpu();
  sched::restore_context(cpu_, sched_.tcb(t).ctx, ram_.kstack_top());
  loaded_ = t;
}

memprot::MpuConfig Kernel::grant(Tid t) const {
  memprot::MpuConfig g;
  if (!cfg_.modules.memprot) return g;
  const int app = app_of(t);
  if (app < 0) {
    g.enabled = true;
    return g;
  }
  const auto& tc = sched_.tcb(t);
  return memprot::grant_for(apps_[app].layout, {tc.stack_base, tc.stack_words * 4}, true);
}

void Kernel::run_guest(Tid t, std::uint64_t& budget) {
  switch_to(t);
  auto [res, n] = vmcu::run_budget(cpu_, mem_, grant(t), budget);
  budget -= std::min<std::uint64_t>(n, budget);
  switch (res.kind) {
    case vmcu::StepResult::Kind::Retired:
      break;
    case vmcu::StepResult::Kind::Trap:
      on_trap(t, res.svc);
      break;
    case vmcu::StepResult::Kind::Fault:
      on_fault(t, res.fault);
      break;
    case vmcu::StepResult::Kind::Halted:
      panic("HALT in user context");
      break;
  }
}

int Kernel::app_of(Tid t) const {
  if (disp_tid_ && t == *disp_tid_) return disp_active_ ? disp_app_ : -1;
  if (!sched_.valid(t)) return -1;
  return sched_.tcb(t).owner;
}

void Kernel::end_of_tick() {
  const auto writes = board_.display().writes();
  if (writes != display_seen_) {
    display_seen_ = writes;
    ++display_updates_;
    const auto& lines = board_.display().lines();
    const auto row = board_.display().cursor_line();
    trace_.emit(now_, "display", {{"line", row > 0 ? lines[row - 1] : lines[0]}});
  }
  auto out = board_.uart_drain_new();
  if (!out.empty()) trace_.emit(now_, "uart", {{"text", out}});
}

void Kernel::console_print(std::string_view text) { hal_.io_write(hal::Device::Uart, text); }

void Kernel::panic(const std::string& msg) {
  if (halted_) return;
  console_print("KERNEL PANIC: " + msg + "\n");
  std::vector<std::pair<std::string, std::string>> fields{{"msg", msg}};
  for (int i = 0; i < 16; ++i) fields.emplace_back("r" + std::to_string(i), hex32(cpu_.regs[i]));
  fields.emplace_back("mode", cpu_.mode == Mode::User ? "user" : "kernel");
  trace_.emit(now_, "panic", std::move(fields));
  panic_msg_ = msg;
  halted_ = true;
  loaded_.reset();
}

void Kernel::on_fault(Tid t, const vmcu::FaultCause& cause) {
  const int app = app_of(t);
  trace_.emit(now_, "fault",
              {{"tid", std::to_string(t)},
               {"kind", std::string(vmcu::to_string(cause.kind))},
               {"pc", hex32(cause.pc)},
               {"addr", hex32(cause.addr)}});
  if (!cfg_.modules.faultmgr) {
    panic("HardFault");
    return;
  }
  if (!cfg_.modules.memprot || app < 0) {
    std::string msg = std::string(vmcu::to_string(cause.kind)) + " at pc=" + hex32(cause.pc);
    if (cause.kind == vmcu::FaultKind::SegFault) msg += " addr=" + hex32(cause.addr);
    panic(msg);
    return;
  }
  loaded_.reset();
  console_print(cause.kind == vmcu::FaultKind::SegFault ? std::string("segmentation fault\n")
                                                        : "fault: " + std::string(vmcu::to_string(cause.kind)) + "\n");
  app_exit(app, AppState::Killed, abi::kExecKilled, cause);
}

std::string Kernel::prompt() const { return syskern::read_username(mem_, ram_.kpage()) + "@minios> "; }

std::string Kernel::netstat() const { return net_ ? net_->report() : "net: disabled"; }

std::optional<std::string> Kernel::resident_app() const {
  if (!apps_[0].used) return std::nullopt;
  return apps_[0].name;
}

}  // namespace minios::kernel
