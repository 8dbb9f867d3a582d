#pragma once

// Priority-based preemptive scheduler over fixed thread slots, plus the
// context switcher that moves register snapshots between the CPU and TCBs.
// The scheduler only decides; the kernel loop executes guest code.

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "minios/types.hpp"
#include "minios/vmcu.hpp"

namespace minios::sched {

using Tid = std::uint32_t;

inline constexpr std::uint8_t kLevels = 8;
inline constexpr std::size_t kDefaultMaxThreads = 16;
inline constexpr Tick kDefaultQuantum = 5;

enum class State : std::uint8_t { Free, Ready, Running, Sleeping, Blocked, WaitingSignal, Dead };

std::string_view to_string(State s);

/// User-mode register snapshot. Saved contexts are always User mode.
struct Context {
  std::array<std::uint32_t, 16> regs{};
  std::uint8_t flags = 0;
  std::uint32_t psp_limit = 0;

  bool operator==(const Context&) const = default;
};

/// Copies the user-visible state out of the CPU.
Context save_context(const vmcu::GuestCpu& cpu);
/// Installs ctx into the CPU in User mode; instret is left untouched.
void restore_context(vmcu::GuestCpu& cpu, const Context& ctx, std::uint32_t msp);

enum class Kind : std::uint8_t { Guest, Kernel };

struct Tcb {
  Tid tid = 0;
  Kind kind = Kind::Guest;
  State state = State::Free;
  std::uint8_t priority = 4;
  Tick wake_at = 0;
  bool signal_pending = false;
  Context ctx;
  std::uint32_t stack_base = 0;
  std::uint32_t stack_words = 0;
  std::uint32_t entry = 0;
  std::uint32_t arg = 0;
  int owner = -1;  // app slot, -1 for kernel threads
  std::uint64_t dispatches = 0;
  Tick quantum_used = 0;
  std::string name;

  bool live() const { return state != State::Free && state != State::Dead; }
};

struct Decision {
  Tick now = 0;
  std::optional<Tid> prev;
  Tid next = 0;
  std::uint8_t next_priority = 0;
  int highest_ready = -1;  // highest priority still Ready after the pick, -1 if none
  const char* reason = "";
};

class Scheduler {
 public:
  Scheduler(std::size_t guest_slots = kDefaultMaxThreads, Tick quantum = kDefaultQuantum);

  std::size_t guest_slots() const { return guest_slots_; }
  Tick quantum() const { return quantum_; }

  /// Next never-used guest slot, put in Ready. Dead slots are not reused.
  std::optional<Tid> create(std::uint8_t priority);
  /// Kernel threads live in tids after the guest slots.
  Tid create_kernel(std::uint8_t priority, std::string name);

  Tcb& tcb(Tid t) { return tcbs_.at(t); }
  const Tcb& tcb(Tid t) const { return tcbs_.at(t); }
  bool valid(Tid t) const { return t < tcbs_.size(); }
  std::size_t size() const { return tcbs_.size(); }

  std::optional<Tid> current() const { return current_; }

  /// Picks the head of the highest non-empty ready queue if nothing runs.
  std::optional<Tid> dispatch();

  /// SysTick: wake sleepers due by `now`, charge the quantum, and preempt
  /// for a strictly higher-priority Ready thread or an expired quantum
  /// with an equal-priority peer.
  void on_systick(Tick now);

  /// Moves a not-running thread into Ready (back of its FIFO).
  void make_ready(Tid t);
  /// If a Ready thread outranks the running one, the running thread goes
  /// to the front of its FIFO and gives up the CPU.
  bool preempt_if_higher();

  // Operations on the running thread.
  void yield();
  void sleep_until(Tick when);
  /// Returns true if the caller must block; false if a pending signal was consumed.
  bool wait_signal();
  void block();
  void exit_current();

  int signal(Tid t);
  int set_priority(Tid t, std::int64_t priority);
  /// Removes the thread from every queue and marks it Dead.
  void kill(Tid t);
  /// Returns a kernel thread to WaitingSignal with no pending signal.
  void park(Tid t);

  void set_now(Tick now) { now_ = now; }
  Tick now() const { return now_; }

  using Observer = std::function<void(const Decision&)>;
  void set_observer(Observer o) { observer_ = std::move(o); }

  /// Tids in the ready FIFO of a priority level (front first).
  const std::deque<Tid>& ready_queue(std::uint8_t level) const { return ready_.at(level); }
  int highest_ready() const;
  bool in_any_queue(Tid t) const;

 private:
  void enqueue(Tid t, bool front);
  void remove_from_ready(Tid t);
  void wake_sleepers(Tick now);

  std::size_t guest_slots_;
  Tick quantum_;
  std::vector<Tcb> tcbs_;
  Tid next_guest_ = 0;
  std::array<std::deque<Tid>, kLevels> ready_{};
  std::optional<Tid> current_;
  std::optional<Tid> last_;
  Tick now_ = 0;
  const char* pending_reason_ = "start";
  Observer observer_;
};

}  // namespace minios::sched
