#include <algorithm>
#include <cctype>
#include <sstream>

#include "minios/kernel.hpp"

namespace minios::kernel {

namespace {

std::vector<std::string> words(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

void Kernel::console_step() {
  for (;;) {
    if (halted_) return;
    if (console_needs_prompt_) {
      console_print(prompt());
      console_needs_prompt_ = false;
    }
    if (auto line = io_.uart.take_line()) {
      console_print(*line + "\n");
      console_exec(*line);
      if (halted_) return;
      if (console_waiting_app_) {
        sched_.block();
        return;
      }
      console_needs_prompt_ = true;
      continue;
    }
    if (sched_.wait_signal()) return;
  }
}

void Kernel::console_exec(const std::string& line) {
  const auto w = words(line);
  if (w.empty()) return;
  trace_.emit(now_, "console", {{"line", line}});
  const std::string& cmd = w[0];
  auto arg = [&](std::size_t i) { return i < w.size() ? w[i] : std::string(); };
  auto fs_error = [&](const fatro::FsError& e) { console_print(std::string(fatro::to_string(e.code())) + "\n"); };

  if (cmd == "ls" || cmd == "cd" || cmd == "cat") {
    if (!fs_) {
      console_print("fs: disabled\n");
      return;
    }
    try {
      if (cmd == "ls") {
        for (const auto& e : fs_->readdir(arg(1))) console_print(e.name + (e.is_dir() ? "/" : "") + "\n");
      } else if (cmd == "cd") {
        fs_->cd(w.size() > 1 ? w[1] : "/");
      } else {
        if (w.size() < 2) {
          console_print("usage: cat <file>\n");
          return;
        }
        auto e = fs_->stat(w[1]);
        if (e.is_dir()) {
          console_print(std::string(fatro::to_string(fatro::FsErrc::NotAFile)) + "\n");
          return;
        }
        auto data = fs_->read_entry(e, 0, e.size);
        std::string text(data.begin(), data.end());
        if (text.empty() || text.back() != '\n') text += '\n';
        console_print(text);
      }
    } catch (const fatro::FsError& e) {
      fs_error(e);
    }
  } else if (cmd == "netstat") {
    console_print(netstat() + "\n");
  } else if (cmd == "run") {
    if (w.size() < 2) {
      console_print("usage: run <name>\n");
      return;
    }
    std::string path = upper(w[1]);
    if (path.find('.') == std::string::npos) path += ".APP";
    if (auto err = load_into(0, path, std::nullopt))
      console_print(*err + "\n");
    else
      console_waiting_app_ = true;
  } else if (cmd == "login") {
    if (w.size() < 2) {
      console_print("usage: login <name>\n");
      return;
    }
    syskern::write_username(mem_, ram_.kpage(), w[1]);
  } else {
    console_print("unknown command: " + cmd + "\n");
  }
}

void Kernel::dispatcher_step() {
  for (;;) {
    auto ev = io_.next();
    if (!ev) {
      if (sched_.wait_signal()) return;
      continue;
    }
    if (ev->app < 0 || ev->app > 1 || !apps_[ev->app].used) continue;

    const Tid d = *disp_tid_;
    auto& tc = sched_.tcb(d);
    const std::uint32_t base = ram_.arena_base();
    const std::uint32_t arg = base + kDispatcherStack - abi::uartline::kSize;
    std::vector<std::uint8_t> block(abi::uartline::kSize, 0);
    if (ev->kind == io::Event::NetworkFrame) {
      const auto& f = ev->frame;
      block[abi::netframe::kSrc] = static_cast<std::uint8_t>(f.src);
      block[abi::netframe::kSrc + 1] = static_cast<std::uint8_t>(f.src >> 8);
      block[abi::netframe::kDst] = static_cast<std::uint8_t>(f.dst);
      block[abi::netframe::kDst + 1] = static_cast<std::uint8_t>(f.dst >> 8);
      block[abi::netframe::kSeq] = f.seq;
      const auto len = std::min<std::size_t>(f.payload.size(), abi::netframe::kMaxPayload);
      block[abi::netframe::kLen] = static_cast<std::uint8_t>(len);
      std::copy_n(f.payload.begin(), len, block.begin() + abi::netframe::kPayload);
    } else {
      const auto len = std::min<std::size_t>(ev->line.size(), abi::uartline::kMaxLine);
      for (int i = 0; i < 4; ++i) block[abi::uartline::kLen + i] = static_cast<std::uint8_t>(len >> (8 * i));
      std::copy_n(ev->line.begin(), len, block.begin() + abi::uartline::kText);
    }
    mem_.write(arg, block);

    tc.stack_base = base;
    tc.stack_words = kDispatcherStack / 4;
    tc.ctx = {};
    tc.ctx.regs[0] = arg;
    tc.ctx.regs[9] = apps_[ev->app].layout.base;
    tc.ctx.regs[vmcu::GuestCpu::kSp] = arg;
    tc.ctx.regs[vmcu::GuestCpu::kLr] = vmcu::kReturnSentinel;
    tc.ctx.regs[vmcu::GuestCpu::kPc] = ev->handler;
    tc.ctx.psp_limit = base;
    if (loaded_ == d) loaded_.reset();
    disp_active_ = true;
    disp_app_ = ev->app;
    trace_.emit(now_, "ioevent",
                {{"event", ev->kind == io::Event::UartLine ? "uart_line" : "network_frame"},
                 {"app", std::to_string(ev->app)}});
    return;
  }
}

}  // namespace minios::kernel
