#include "minios/sched.hpp"

#include <algorithm>
#include <stdexcept>

namespace minios::sched {

std::string_view to_string(State s) {
  switch (s) {
    case State::Free: return "Free";
    case State::Ready: return "Ready";
    case State::Running: return "Running";
    case State::Sleeping: return "Sleeping";
    case State::Blocked: return "Blocked";
    case State::WaitingSignal: return "WaitingSignal";
    case State::Dead: return "Dead";
  }
  return "?";
}

Context save_context(const vmcu::GuestCpu& cpu) {
  Context c;
  c.regs = cpu.regs;
  if (cpu.mode == Mode::Kernel) c.regs[vmcu::GuestCpu::kSp] = cpu.psp;
  c.flags = cpu.flags;
  c.psp_limit = cpu.psp_limit;
  return c;
}

void restore_context(vmcu::GuestCpu& cpu, const Context& ctx, std::uint32_t msp) {
  cpu.regs = ctx.regs;
  cpu.flags = ctx.flags;
  cpu.psp_limit = ctx.psp_limit;
  cpu.mode = Mode::User;
  cpu.psp = ctx.regs[vmcu::GuestCpu::kSp];
  cpu.msp = msp;
  cpu.fault.reset();
}

Scheduler::Scheduler(std::size_t guest_slots, Tick quantum)
    : guest_slots_(guest_slots), quantum_(quantum == 0 ? 1 : quantum), tcbs_(guest_slots) {
  for (std::size_t i = 0; i < guest_slots; ++i) tcbs_[i].tid = static_cast<Tid>(i);
}

std::optional<Tid> Scheduler::create(std::uint8_t priority) {
  if (next_guest_ >= guest_slots_) return std::nullopt;
  const Tid t = next_guest_++;
  Tcb& tc = tcbs_[t];
  tc = Tcb{};
  tc.tid = t;
  tc.priority = std::min<std::uint8_t>(priority, kLevels - 1);
  tc.state = State::Ready;
  enqueue(t, false);
  return t;
}

Tid Scheduler::create_kernel(std::uint8_t priority, std::string name) {
  Tcb tc;
  tc.tid = static_cast<Tid>(tcbs_.size());
  tc.kind = Kind::Kernel;
  tc.priority = std::min<std::uint8_t>(priority, kLevels - 1);
  tc.name = std::move(name);
  tc.state = State::Ready;
  tcbs_.push_back(std::move(tc));
  enqueue(tcbs_.back().tid, false);
  return tcbs_.back().tid;
}

int Scheduler::highest_ready() const {
  for (int p = kLevels - 1; p >= 0; --p)
    if (!ready_[p].empty()) return p;
  return -1;
}

bool Scheduler::in_any_queue(Tid t) const {
  for (const auto& q : ready_)
    if (std::find(q.begin(), q.end(), t) != q.end()) return true;
  return false;
}

void Scheduler::enqueue(Tid t, bool front) {
  auto& q = ready_[tcbs_[t].priority];
  if (front)
    q.push_front(t);
  else
    q.push_back(t);
}

void Scheduler::remove_from_ready(Tid t) {
  for (auto& q : ready_) q.erase(std::remove(q.begin(), q.end(), t), q.end());
}

std::optional<Tid> Scheduler::dispatch() {
  if (current_) return current_;
  const int p = highest_ready();
  if (p < 0) return std::nullopt;
  const Tid t = ready_[p].front();
  ready_[p].pop_front();
  Tcb& tc = tcbs_[t];
  tc.state = State::Running;
  ++tc.dispatches;
  tc.quantum_used = 0;
  current_ = t;
  if (observer_) {
    Decision d;
    d.now = now_;
    d.prev = last_;
    d.next = t;
    d.next_priority = tc.priority;
    d.highest_ready = highest_ready();
    d.reason = pending_reason_;
    observer_(d);
  }
  last_ = t;
  pending_reason_ = "idle";
  return t;
}

void Scheduler::wake_sleepers(Tick now) {
  for (auto& tc : tcbs_) {
    if (tc.state == State::Sleeping && tc.wake_at <= now) {
      tc.state = State::Ready;
      enqueue(tc.tid, false);
    }
  }
}

void Scheduler::on_systick(Tick now) {
  now_ = now;
  wake_sleepers(now);
  if (!current_) return;
  Tcb& cur = tcbs_[*current_];
  ++cur.quantum_used;
  if (preempt_if_higher()) return;
  if (cur.quantum_used >= quantum_ && !ready_[cur.priority].empty()) {
    cur.state = State::Ready;
    enqueue(cur.tid, false);
    current_.reset();
    pending_reason_ = "quantum";
  }
}

void Scheduler::make_ready(Tid t) {
  Tcb& tc = tcbs_.at(t);
  if (tc.state == State::Ready || tc.state == State::Running || !tc.live()) return;
  tc.state = State::Ready;
  enqueue(t, false);
}

bool Scheduler::preempt_if_higher() {
  if (!current_) return false;
  Tcb& cur = tcbs_[*current_];
  if (highest_ready() <= static_cast<int>(cur.priority)) return false;
  cur.state = State::Ready;
  enqueue(cur.tid, true);
  current_.reset();
  pending_reason_ = "preempt";
  return true;
}

void Scheduler::yield() {
  if (!current_) return;
  Tcb& cur = tcbs_[*current_];
  cur.state = State::Ready;
  enqueue(cur.tid, false);
  current_.reset();
  pending_reason_ = "yield";
}

void Scheduler::sleep_until(Tick when) {
  if (!current_) return;
  Tcb& cur = tcbs_[*current_];
  cur.state = State::Sleeping;
  cur.wake_at = when;
  current_.reset();
  pending_reason_ = "sleep";
}

bool Scheduler::wait_signal() {
  if (!current_) throw std::logic_error("wait_signal without a running thread");
  Tcb& cur = tcbs_[*current_];
  if (cur.signal_pending) {
    cur.signal_pending = false;
    return false;
  }
  cur.state = State::WaitingSignal;
  current_.reset();
  pending_reason_ = "wait";
  return true;
}

void Scheduler::block() {
  if (!current_) return;
  tcbs_[*current_].state = State::Blocked;
  current_.reset();
  pending_reason_ = "block";
}

void Scheduler::exit_current() {
  if (!current_) return;
  tcbs_[*current_].state = State::Dead;
  current_.reset();
  pending_reason_ = "exit";
}

int Scheduler::signal(Tid t) {
  if (!valid(t) || !tcbs_[t].live()) return -1;
  Tcb& tc = tcbs_[t];
  if (tc.state == State::WaitingSignal) {
    tc.signal_pending = false;
    tc.state = State::Ready;
    enqueue(t, false);
  } else {
    tc.signal_pending = true;
  }
  return 0;
}

int Scheduler::set_priority(Tid t, std::int64_t priority) {
  if (priority < 0 || priority >= kLevels) return -1;
  if (!valid(t) || !tcbs_[t].live()) return -1;
  Tcb& tc = tcbs_[t];
  const bool queued = tc.state == State::Ready;
  if (queued) remove_from_ready(t);
  tc.priority = static_cast<std::uint8_t>(priority);
  if (queued) enqueue(t, false);
  return 0;
}

void Scheduler::kill(Tid t) {
  if (!valid(t)) return;
  remove_from_ready(t);
  if (current_ == t) {
    current_.reset();
    pending_reason_ = "kill";
  }
  if (tcbs_[t].state != State::Free) tcbs_[t].state = State::Dead;
}

void Scheduler::park(Tid t) {
  remove_from_ready(t);
  if (current_ == t) current_.reset();
  tcbs_.at(t).state = State::WaitingSignal;
  tcbs_[t].signal_pending = false;
}

}  // namespace minios::sched
