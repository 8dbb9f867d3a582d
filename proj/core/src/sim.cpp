#include "minios/sim.hpp"

#include <algorithm>
#include <charconv>

namespace minios::sim {

std::vector<ScriptLine> parse_script(std::string_view text) {
  std::vector<ScriptLine> out;
  Tick next = kScriptStart;
  int lineno = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ScriptLine s{next, std::string(line)};
    if (!line.empty() && line.front() == '@') {
      auto sp = line.find(' ');
      auto num = line.substr(1, sp == std::string_view::npos ? std::string_view::npos : sp - 1);
      Tick at = 0;
      auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), at);
      if (ec != std::errc() || p != num.data() + num.size() || num.empty())
        throw ConfigError("script line " + std::to_string(lineno) + ": bad tick stamp");
      if (!out.empty() && at < out.back().at)
        throw ConfigError("script line " + std::to_string(lineno) + ": tick goes backwards");
      s.at = at;
      s.text = sp == std::string_view::npos ? std::string() : std::string(line.substr(sp + 1));
    }
    out.push_back(s);
    next = s.at + kScriptGap;
  }
  return out;
}

RunResult run_node(const std::vector<std::uint8_t>& image, const RunOptions& opts) {
  kernel::Kernel k(opts.config, periph::BlockDevice(image), 0, opts.seed);
  Tick ticks = opts.ticks;
  if (ticks == 0) ticks = (opts.script.empty() ? 0 : opts.script.back().at) + 1000;

  std::size_t next = 0;
  for (Tick t = 1; t <= ticks; ++t) {
    while (next < opts.script.size() && opts.script[next].at <= t) k.input(opts.script[next++].text + "\n");
    k.tick(t);
    if (t == 1 && opts.load && !k.halted()) {
      if (auto err = k.load(*opts.load)) throw ConfigError("cannot load " + *opts.load + ": " + *err);
    }
    if (k.halted()) {
      ticks = t;
      break;
    }
  }
  return {k.uart(), k.trace().text(), k.halted(), k.panic_message(), ticks};
}

MeshSim::MeshSim(mesh::Topology topo, const std::map<mesh::NodeId, MeshNodeSpec>& specs, std::uint64_t seed)
    : world_([&] {
        topo.seed = seed;
        return std::move(topo);
      }()) {
  for (auto id : world_.topology().nodes) {
    auto it = specs.find(id);
    if (it == specs.end()) throw ConfigError("node " + std::to_string(id) + ": no image");
    try {
      auto k = std::make_unique<kernel::Kernel>(it->second.config, periph::BlockDevice(it->second.image), id, seed);
      if (it->second.config.modules.net) target_ = std::max(target_, it->second.config.net.version);
      k->boot(0);
      if (it->second.load) {
        if (auto err = k->load(*it->second.load))
          throw ConfigError("cannot load " + *it->second.load + ": " + *err);
      }
      world_.attach(id, k.get());
      nodes_[id] = std::move(k);
    } catch (const ConfigError& e) {
      throw ConfigError("node " + std::to_string(id) + ": " + e.what());
    }
  }
  if (all_current()) converged_ = 0;
}

bool MeshSim::all_current() const {
  return std::all_of(nodes_.begin(), nodes_.end(), [&](const auto& kv) {
    const auto* n = kv.second->net();
    return n != nullptr && n->trickle.version() == target_;
  });
}

void MeshSim::run(Tick ticks, bool stop_on_convergence) {
  for (Tick i = 0; i < ticks; ++i) {
    if (stop_on_convergence && converged_) return;
    world_.advance(1);
    if (!converged_ && all_current()) converged_ = world_.now();
  }
}

std::string MeshSim::summary() const {
  std::string out;
  for (const auto& [id, k] : nodes_) out += "node " + std::to_string(id) + " " + k->netstat() + "\n";
  out += converged_ ? "converged at tick " + std::to_string(*converged_) + "\n" : std::string("no convergence\n");
  return out;
}

}  // namespace minios::sim
