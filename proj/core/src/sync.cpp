#include "minios/sync.hpp"

#include <algorithm>

namespace minios::sync {

namespace {

template <typename Table>
std::optional<std::size_t> free_slot(const Table& t) {
  for (std::size_t i = 0; i < t.size(); ++i)
    if (!t[i].used) return i;
  return std::nullopt;
}

void drop(std::deque<Tid>& q, const std::vector<Tid>& dead) {
  q.erase(std::remove_if(q.begin(), q.end(),
                         [&](Tid t) { return std::find(dead.begin(), dead.end(), t) != dead.end(); }),
          q.end());
}

bool is_dead(const std::optional<Tid>& t, const std::vector<Tid>& dead) {
  return t && std::find(dead.begin(), dead.end(), *t) != dead.end();
}

}  // namespace

void Sync::wake(Tid t, std::int32_t r0) {
  sched_.tcb(t).ctx.regs[0] = static_cast<std::uint32_t>(r0);
  sched_.make_ready(t);
}

// ---------------------------------------------------------------- locks

Outcome Sync::lock_create(int app) {
  auto i = free_slot(locks_);
  if (!i) return Outcome::value(-1);
  locks_[*i] = Lock{};
  locks_[*i].used = true;
  locks_[*i].app = app;
  return Outcome::value(static_cast<std::int32_t>(*i));
}

Outcome Sync::lock_acquire(std::uint32_t h, Tid caller) {
  if (h >= locks_.size() || !locks_[h].used) return Outcome::value(-1);
  Lock& l = locks_[h];
  if (l.owner == caller) return Outcome::value(-1);
  if (!l.owner) {
    l.owner = caller;
    return Outcome::value(0);
  }
  l.waiters.push_back(caller);
  return Outcome::block();
}

Outcome Sync::lock_release(std::uint32_t h, Tid caller) {
  if (h >= locks_.size() || !locks_[h].used) return Outcome::value(-1);
  Lock& l = locks_[h];
  if (l.owner != caller) return Outcome::value(-1);
  l.owner.reset();
  if (!l.waiters.empty()) {
    l.owner = l.waiters.front();
    l.waiters.pop_front();
    wake(*l.owner, 0);
  }
  return Outcome::value(0);
}

// ---------------------------------------------------------------- semaphores

Outcome Sync::sem_create(int app, std::int64_t initial) {
  if (initial < 0 || initial > 0x7FFFFFFF) return Outcome::value(-1);
  auto i = free_slot(sems_);
  if (!i) return Outcome::value(-1);
  sems_[*i] = Semaphore{};
  sems_[*i].used = true;
  sems_[*i].app = app;
  sems_[*i].count = static_cast<std::uint32_t>(initial);
  return Outcome::value(static_cast<std::int32_t>(*i));
}

Outcome Sync::sem_wait(std::uint32_t h, Tid caller) {
  if (h >= sems_.size() || !sems_[h].used) return Outcome::value(-1);
  Semaphore& s = sems_[h];
  if (s.count > 0) {
    --s.count;
    return Outcome::value(0);
  }
  s.waiters.push_back(caller);
  return Outcome::block();
}

Outcome Sync::sem_post(std::uint32_t h, Tid) {
  if (h >= sems_.size() || !sems_[h].used) return Outcome::value(-1);
  Semaphore& s = sems_[h];
  if (!s.waiters.empty()) {
    const Tid t = s.waiters.front();
    s.waiters.pop_front();
    wake(t, 0);
  } else {
    ++s.count;
  }
  return Outcome::value(0);
}

// ---------------------------------------------------------------- monitors

void Sync::monitor_handoff(Monitor& m) {
  m.owner.reset();
  if (m.entry.empty()) return;
  m.owner = m.entry.front();
  m.entry.pop_front();
  wake(*m.owner, 0);
}

Outcome Sync::mon_enter(std::uint32_t h, Tid caller) {
  if (h >= mons_.size()) return Outcome::value(-1);
  Monitor& m = mons_[h];
  if (m.owner == caller) return Outcome::value(-1);
  if (!m.owner) {
    m.owner = caller;
    return Outcome::value(0);
  }
  m.entry.push_back(caller);
  return Outcome::block();
}

Outcome Sync::mon_exit(std::uint32_t h, Tid caller) {
  if (h >= mons_.size() || mons_[h].owner != caller) return Outcome::value(-1);
  monitor_handoff(mons_[h]);
  return Outcome::value(0);
}

Outcome Sync::mon_wait(std::uint32_t h, Tid caller) {
  if (h >= mons_.size() || mons_[h].owner != caller) return Outcome::value(-1);
  Monitor& m = mons_[h];
  m.waiting.push_back(caller);
  monitor_handoff(m);
  return Outcome::block();
}

Outcome Sync::mon_notify(std::uint32_t h, Tid caller) {
  if (h >= mons_.size() || mons_[h].owner != caller) return Outcome::value(-1);
  Monitor& m = mons_[h];
  if (!m.waiting.empty()) {
    m.entry.push_back(m.waiting.front());
    m.waiting.pop_front();
  }
  return Outcome::value(0);
}

// ---------------------------------------------------------------- barriers

Outcome Sync::barrier_create(int app, std::int64_t n) {
  if (n <= 0 || n > 0xFFFF) return Outcome::value(-1);
  auto i = free_slot(barriers_);
  if (!i) return Outcome::value(-1);
  barriers_[*i] = Barrier{};
  barriers_[*i].used = true;
  barriers_[*i].app = app;
  barriers_[*i].n = static_cast<std::uint32_t>(n);
  return Outcome::value(static_cast<std::int32_t>(*i));
}

Outcome Sync::barrier_wait(std::uint32_t h, Tid caller) {
  if (h >= barriers_.size() || !barriers_[h].used) return Outcome::value(-1);
  Barrier& b = barriers_[h];
  if (b.arrived.size() + 1 < b.n) {
    b.arrived.push_back(caller);
    return Outcome::block();
  }
  ++b.generation;
  const auto gen = static_cast<std::int32_t>(b.generation);
  for (Tid t : b.arrived) wake(t, gen);
  b.arrived.clear();
  return Outcome::value(gen);
}

// ---------------------------------------------------------------- reclaim

void Sync::reclaim(int app, const std::vector<Tid>& dead) {
  for (auto& l : locks_) {
    if (l.used && l.app == app) {
      l = Lock{};
      continue;
    }
    drop(l.waiters, dead);
    if (is_dead(l.owner, dead)) {
      l.owner.reset();
      if (!l.waiters.empty()) {
        l.owner = l.waiters.front();
        l.waiters.pop_front();
        wake(*l.owner, 0);
      }
    }
  }
  for (auto& s : sems_) {
    if (s.used && s.app == app)
      s = Semaphore{};
    else
      drop(s.waiters, dead);
  }
  for (auto& b : barriers_) {
    if (b.used && b.app == app)
      b = Barrier{};
    else
      drop(b.arrived, dead);
  }
  for (auto& m : mons_) {
    drop(m.entry, dead);
    drop(m.waiting, dead);
    if (is_dead(m.owner, dead)) monitor_handoff(m);
  }
}

std::vector<Tid> Sync::blocked_tids() const {
  std::vector<Tid> out;
  for (const auto& l : locks_) out.insert(out.end(), l.waiters.begin(), l.waiters.end());
  for (const auto& s : sems_) out.insert(out.end(), s.waiters.begin(), s.waiters.end());
  for (const auto& m : mons_) {
    out.insert(out.end(), m.entry.begin(), m.entry.end());
    out.insert(out.end(), m.waiting.begin(), m.waiting.end());
  }
  for (const auto& b : barriers_) out.insert(out.end(), b.arrived.begin(), b.arrived.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace minios::sync
