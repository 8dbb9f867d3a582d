#pragma once

// Randomized thread programs driven directly against the Scheduler, with a
// small shadow model of signal state. Shared by unit and acceptance tests.

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "minios/sched.hpp"

namespace schedh {

using minios::Tick;
using minios::sched::Scheduler;
using minios::sched::State;
using minios::sched::Tid;

struct Report {
  std::uint64_t decisions = 0;
  std::uint64_t priority_violations = 0;
  std::uint64_t lost_wakeups = 0;
  std::uint64_t dead_requeued = 0;
  std::vector<std::string> notes;

  bool ok() const { return priority_violations == 0 && lost_wakeups == 0 && dead_requeued == 0; }
};

// Random mix of run/yield/sleep/wait/signal/priority changes/exit.
inline Report random_program(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::uint64_t n) { return rng() % n; };
  const std::size_t n = 2 + pick(5);
  Scheduler s(16, 1 + pick(6));
  Report rep;
  s.set_observer([&](const minios::sched::Decision& d) {
    ++rep.decisions;
    if (d.highest_ready > static_cast<int>(d.next_priority)) ++rep.priority_violations;
  });
  std::vector<Tid> tids;
  for (std::size_t i = 0; i < n; ++i) tids.push_back(*s.create(static_cast<std::uint8_t>(pick(4))));
  std::map<Tid, bool> owed;  // signal issued after the last wait return
  std::vector<bool> dead(n, false);

  const Tick ticks = 200 + pick(300);
  for (Tick now = 1; now <= ticks; ++now) {
    s.on_systick(now);
    for (int actions = 0; actions < 4; ++actions) {
      auto cur = s.dispatch();
      if (!cur) break;
      const Tid t = *cur;
      switch (pick(10)) {
        case 0: s.yield(); break;
        case 1: s.sleep_until(now + 1 + pick(8)); break;
        case 2: {
          const bool had = owed[t];
          const bool blocks = s.wait_signal();
          if (had && blocks) ++rep.lost_wakeups;
          if (!blocks) owed[t] = false;
          break;
        }
        case 3:
        case 4: {
          const Tid target = tids[pick(n)];
          const bool waiting = s.tcb(target).state == State::WaitingSignal;
          const int rc = s.signal(target);
          if (dead[target] != (rc == -1)) rep.notes.push_back("signal rc mismatch");
          if (waiting && s.tcb(target).state != State::Ready) ++rep.lost_wakeups;
          if (!waiting && rc == 0) owed[target] = true;
          if (waiting) owed[target] = false;
          s.preempt_if_higher();
          break;
        }
        case 5:
          s.set_priority(tids[pick(n)], static_cast<std::int64_t>(pick(4)));
          s.preempt_if_higher();
          break;
        case 6:
          if (pick(20) == 0) {
            dead[t] = true;
            s.exit_current();
          }
          break;
        default:
          actions = 4;  // runs the rest of the tick
          break;
      }
      for (std::size_t i = 0; i < n; ++i)
        if (dead[tids[i]] && s.in_any_queue(tids[i])) ++rep.dead_requeued;
    }
  }
  // Nobody may still be waiting with a signal owed to it.
  for (Tid t : tids)
    if (s.tcb(t).state == State::WaitingSignal && owed[t]) ++rep.lost_wakeups;
  return rep;
}

struct Fairness {
  std::uint64_t min_quanta = 0;
  std::uint64_t max_quanta = 0;
};

// k always-ready threads at one priority, run for `quanta` quanta.
inline Fairness round_robin(std::size_t k, Tick quantum, std::uint64_t quanta) {
  Scheduler s(16, quantum);
  std::vector<Tid> tids;
  for (std::size_t i = 0; i < k; ++i) tids.push_back(*s.create(3));
  std::map<Tid, std::uint64_t> ran;
  s.dispatch();
  for (Tick now = 1; now <= quanta * quantum; ++now) {
    ++ran[*s.current()];
    s.on_systick(now);
    s.dispatch();
  }
  Fairness f{~0ULL, 0};
  for (Tid t : tids) {
    const std::uint64_t q = ran[t] / quantum;
    f.min_quanta = std::min(f.min_quanta, q);
    f.max_quanta = std::max(f.max_quanta, q);
  }
  return f;
}

inline bool context_roundtrip(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  minios::vmcu::GuestCpu cpu;
  cpu.mode = minios::Mode::User;
  for (auto& r : cpu.regs) r = static_cast<std::uint32_t>(rng());
  cpu.regs[15] &= ~3u;
  cpu.flags = static_cast<std::uint8_t>(rng() & 0xF);
  cpu.psp_limit = static_cast<std::uint32_t>(rng());
  cpu.msp = 0x2003F000;
  cpu.psp = cpu.regs[13];
  cpu.instret = rng();
  const auto before = cpu;
  const auto ctx = minios::sched::save_context(cpu);
  minios::vmcu::GuestCpu other;
  other.instret = before.instret;
  minios::sched::restore_context(other, ctx, before.msp);
  return other == before && minios::sched::save_context(other) == ctx;
}

}  // namespace schedh
