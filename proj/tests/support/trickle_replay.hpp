#pragma once

// Replays one isolated Trickle node and renders the same lines as
// oracles/trickle_oracle.py single.

#include <string>
#include <vector>

#include "minios/net.hpp"

namespace trickle_replay {

inline std::vector<std::string> single(std::uint64_t seed, minios::Tick ticks) {
  using namespace minios::net;
  Trickle tr({}, node_seed(seed, 0));
  tr.start(0);
  std::vector<std::string> out;
  auto interval_line = [&] {
    return "interval start=" + std::to_string(tr.interval_start()) + " i=" + std::to_string(tr.interval()) +
           " t=" + std::to_string(tr.t());
  };
  out.push_back(interval_line());
  for (minios::Tick now = 1; now <= ticks; ++now) {
    const auto before = tr.interval_start();
    if (tr.on_tick(now)) out.push_back("tx " + std::to_string(now));
    if (tr.interval_start() != before) out.push_back(interval_line());
  }
  return out;
}

}  // namespace trickle_replay
