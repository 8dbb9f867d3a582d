#pragma once

// Kernel-backed lock, counting semaphore, monitor (signal-and-continue),
// and barrier. Fixed tables of 32 objects per kind; monitors exist
// implicitly, the other kinds are handed out by *_create.

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "minios/sched.hpp"

namespace minios::sync {

inline constexpr std::size_t kObjectsPerKind = 32;

using sched::Tid;

/// r0 for the caller, or a request to block it. Threads woken later get
/// their r0 written into the saved context.
struct Outcome {
  std::int32_t r0 = 0;
  bool blocked = false;

  static Outcome value(std::int32_t v) { return {v, false}; }
  static Outcome block() { return {0, true}; }
  bool operator==(const Outcome&) const = default;
};

struct Lock {
  bool used = false;
  int app = -1;
  std::optional<Tid> owner;
  std::deque<Tid> waiters;
};

struct Semaphore {
  bool used = false;
  int app = -1;
  std::uint32_t count = 0;
  std::deque<Tid> waiters;
};

struct Monitor {
  std::optional<Tid> owner;
  std::deque<Tid> entry;
  std::deque<Tid> waiting;
};

struct Barrier {
  bool used = false;
  int app = -1;
  std::uint32_t n = 0;
  std::uint32_t generation = 0;
  std::deque<Tid> arrived;
};

class Sync {
 public:
  explicit Sync(sched::Scheduler& s) : sched_(s) {}

  Outcome lock_create(int app);
  Outcome lock_acquire(std::uint32_t h, Tid caller);
  Outcome lock_release(std::uint32_t h, Tid caller);

  Outcome sem_create(int app, std::int64_t initial);
  Outcome sem_wait(std::uint32_t h, Tid caller);
  Outcome sem_post(std::uint32_t h, Tid caller);

  Outcome mon_enter(std::uint32_t h, Tid caller);
  Outcome mon_exit(std::uint32_t h, Tid caller);
  Outcome mon_wait(std::uint32_t h, Tid caller);
  Outcome mon_notify(std::uint32_t h, Tid caller);

  Outcome barrier_create(int app, std::int64_t n);
  Outcome barrier_wait(std::uint32_t h, Tid caller);

  /// Frees objects created by `app` and drops `dead` threads from every
  /// queue, passing on anything they owned.
  void reclaim(int app, const std::vector<Tid>& dead);

  const Lock& lock(std::size_t h) const { return locks_.at(h); }
  const Semaphore& semaphore(std::size_t h) const { return sems_.at(h); }
  const Monitor& monitor(std::size_t h) const { return mons_.at(h); }
  const Barrier& barrier(std::size_t h) const { return barriers_.at(h); }

  /// Tids currently blocked on any object, for integrity checks.
  std::vector<Tid> blocked_tids() const;

 private:
  void wake(Tid t, std::int32_t r0);
  void monitor_handoff(Monitor& m);

  sched::Scheduler& sched_;
  std::array<Lock, kObjectsPerKind> locks_{};
  std::array<Semaphore, kObjectsPerKind> sems_{};
  std::array<Monitor, kObjectsPerKind> mons_{};
  std::array<Barrier, kObjectsPerKind> barriers_{};
};

}  // namespace minios::sync
