#pragma once

// One MiniOS node: boot, the per-tick kernel loop, application loader,
// syscall gateway, fault manager, the kernel console, and the IO event
// dispatcher, on top of the board and the guest CPU.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "minios/fatro.hpp"
#include "minios/gasm.hpp"
#include "minios/hal.hpp"
#include "minios/io.hpp"
#include "minios/memprot.hpp"
#include "minios/mesh.hpp"
#include "minios/net.hpp"
#include "minios/periph.hpp"
#include "minios/sched.hpp"
#include "minios/sync.hpp"
#include "minios/syskern.hpp"
#include "minios/vmcu.hpp"

namespace minios::kernel {

using sched::Tid;

inline constexpr std::size_t kMaxFds = 8;
inline constexpr std::uint32_t kDispatcherStack = 2048;
inline constexpr std::uint8_t kConsolePriority = 5;
inline constexpr std::uint8_t kDispatcherPriority = 6;
inline constexpr std::size_t kDisplayLine = 32;

enum class AppState : std::uint8_t { Running, Exited, Killed };

struct OpenFile {
  bool used = false;
  fatro::DirEntry entry;
  std::uint32_t offset = 0;
};

struct LoadedApp {
  bool used = false;
  std::string name;
  gasm::AppBinary image;
  memprot::AppLayout layout;
  Tid main_tid = 0;
  std::vector<Tid> threads;
  std::array<OpenFile, kMaxFds> fds{};
  std::uint32_t arena_mark = 0;  // arena pointer before this app's stacks
  std::optional<Tid> waiting_parent;  // execv caller blocked on this child
  AppState state = AppState::Running;
};

/// Result of an app run as seen by the console or an execv caller.
struct ExitRecord {
  std::string name;
  AppState state = AppState::Exited;
  std::int32_t code = 0;
  std::optional<vmcu::FaultCause> fault;
};

class Kernel : public mesh::MeshNode {
 public:
  Kernel(syskern::Config cfg, periph::BlockDevice disk, std::uint16_t node_id = 0, std::uint64_t seed = 0);
  Kernel(const Kernel&) = delete;
  Kernel& operator=(const Kernel&) = delete;

  /// Throws hal::ContractError when called twice.
  void boot(Tick now = 0);
  bool booted() const { return booted_; }

  // mesh::MeshNode
  void deliver(const mesh::Frame& f) override;
  /// Boots on the first call if boot() was not called explicitly.
  void tick(Tick now) override;
  std::vector<mesh::Frame> take_outgoing() override;

  /// Queues console input bytes on the serial port.
  void input(std::string_view bytes) { board_.uart_receive(bytes); }

  /// Loads an .app from the volume into the primary slot and starts it.
  /// Returns an error string ("not found", "bad image", "no memory", "busy").
  std::optional<std::string> load(std::string_view path);

  const std::string& uart() const { return board_.uart_output(); }
  std::string prompt() const;
  std::string netstat() const;
  bool halted() const { return halted_; }
  const std::string& panic_message() const { return panic_msg_; }
  std::optional<std::string> resident_app() const;
  const std::vector<ExitRecord>& exits() const { return exits_; }
  std::uint64_t display_updates() const { return display_updates_; }
  std::uint64_t handlers_run() const { return io_.handlers_run; }
  std::uint64_t instructions() const { return cpu_.instret; }

  const syskern::Config& config() const { return cfg_; }
  syskern::Trace& trace() { return trace_; }
  const syskern::Trace& trace() const { return trace_; }
  periph::Board& board() { return board_; }
  const periph::Board& board() const { return board_; }
  vmcu::Memory& memory() { return mem_; }
  const vmcu::Memory& memory() const { return mem_; }
  sched::Scheduler& scheduler() { return sched_; }
  const sched::Scheduler& scheduler() const { return sched_; }
  const net::NetStack* net() const { return net_.get(); }
  const io::IoManager& io() const { return io_; }
  const syskern::RamLayout& layout() const { return ram_; }
  std::uint16_t node_id() const { return node_id_; }
  Tick now() const { return now_; }
  Tid console_tid() const { return console_tid_; }
  std::optional<Tid> dispatcher_tid() const { return disp_tid_; }

 private:
  // boot / loop
  void install_irqs();
  void on_uart_irq();
  void on_radio_irq();
  void route_uart_lines();
  void run_threads();
  void run_guest(Tid t, std::uint64_t& budget);
  void switch_to(Tid t);
  void unload_cpu();
  memprot::MpuConfig grant(Tid t) const;
  void end_of_tick();

  // faults and panic
  void panic(const std::string& msg);
  void on_fault(Tid t, const vmcu::FaultCause& cause);

  // syscalls
  void on_trap(Tid t, std::uint32_t svc);
  void syscall(Tid t, std::uint32_t n, sched::Context& ctx);
  void on_thread_return(Tid t);
  int app_of(Tid t) const;
  bool user_ok(Tid t, std::uint32_t addr, std::uint32_t len, Access access) const;
  std::optional<std::string> user_string(Tid t, std::uint32_t addr, std::uint32_t max);
  void display_put(std::string_view text);
  std::int32_t sys_thread_create(Tid t, const sched::Context& ctx);
  std::int32_t sys_fs_open(int app, const std::string& path);
  std::int32_t sys_execv(Tid t, const std::string& path, bool& blocked);
  void user_fault(Tid t, std::uint32_t addr, std::uint32_t svc_pc);

  // loader
  std::optional<std::string> load_into(int slot, std::string_view path, std::optional<Tid> parent);
  std::optional<std::uint32_t> arena_alloc(std::uint32_t bytes);
  void app_exit(int slot, AppState how, std::int32_t code, std::optional<vmcu::FaultCause> fault = {});

  // kernel threads
  void console_step();
  void console_exec(const std::string& line);
  void dispatcher_step();
  void console_print(std::string_view text);

  syskern::Config cfg_;
  std::uint16_t node_id_;
  std::uint64_t seed_;
  periph::Board board_;
  hal::Hal hal_;
  syskern::RamLayout ram_;
  vmcu::Memory mem_;
  vmcu::GuestCpu cpu_;
  std::optional<Tid> loaded_;  // thread whose context is live in cpu_
  sched::Scheduler sched_;
  sync::Sync sync_;
  io::IoManager io_;
  std::unique_ptr<net::NetStack> net_;
  std::optional<fatro::FatVolume> fs_;
  syskern::Trace trace_;

  std::array<LoadedApp, 2> apps_{};  // 0 primary, 1 execv child
  std::uint32_t arena_next_ = 0;
  std::vector<ExitRecord> exits_;

  Tid console_tid_ = 0;
  bool console_waiting_app_ = false;
  bool console_needs_prompt_ = true;
  std::optional<Tid> disp_tid_;
  bool disp_active_ = false;
  int disp_app_ = -1;

  std::string display_line_;
  std::uint64_t display_seen_ = 0;
  std::uint64_t display_updates_ = 0;

  bool booted_ = false;
  bool halted_ = false;
  std::string panic_msg_;
  Tick now_ = 0;
};

}  // namespace minios::kernel
