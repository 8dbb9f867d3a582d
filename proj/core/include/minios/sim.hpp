#pragma once

// Host-side scenario drivers shared by the command-line tool and the
// acceptance suite: tick-stamped console scripts, single-node runs and
// lockstep mesh runs with a convergence tracker.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "minios/kernel.hpp"
#include "minios/mesh.hpp"

namespace minios::sim {

inline constexpr Tick kScriptStart = 100;
inline constexpr Tick kScriptGap = 100;

struct ScriptLine {
  Tick at = 0;
  std::string text;
  bool operator==(const ScriptLine&) const = default;
};

/// "@<tick> text" lines feed text at that tick; a line without a stamp
/// comes kScriptGap ticks after the previous one (the first at
/// kScriptStart). Stamps must not go backwards. Throws ConfigError.
std::vector<ScriptLine> parse_script(std::string_view text);

struct RunOptions {
  syskern::Config config;
  std::uint64_t seed = 0;
  Tick ticks = 0;  // 0: last script line + 1000
  std::vector<ScriptLine> script;
  std::optional<std::string> load;  // app started at boot, as if typed
};

struct RunResult {
  std::string transcript;  // everything written to the serial port
  std::string trace;
  bool panicked = false;
  std::string panic_message;
  Tick ticks = 0;
};

/// Boots one node on `image` and advances it (ticks 1..N).
RunResult run_node(const std::vector<std::uint8_t>& image, const RunOptions& opts);

struct MeshNodeSpec {
  syskern::Config config;
  std::vector<std::uint8_t> image;
  std::optional<std::string> load;
};

class MeshSim {
 public:
  MeshSim(mesh::Topology topo, const std::map<mesh::NodeId, MeshNodeSpec>& specs, std::uint64_t seed);

  /// Advances up to `ticks`; with stop_on_convergence the run ends at the
  /// first tick where every node holds the newest seeded version.
  void run(Tick ticks, bool stop_on_convergence = false);

  std::optional<Tick> converged_at() const { return converged_; }
  std::uint32_t target_version() const { return target_; }
  Tick now() const { return world_.now(); }
  kernel::Kernel& node(mesh::NodeId id) { return *nodes_.at(id); }
  const std::map<mesh::NodeId, std::unique_ptr<kernel::Kernel>>& nodes() const { return nodes_; }
  /// One "node <id> <netstat>" line per node, then "converged at tick N"
  /// or "no convergence".
  std::string summary() const;

 private:
  bool all_current() const;

  mesh::World world_;
  std::map<mesh::NodeId, std::unique_ptr<kernel::Kernel>> nodes_;
  std::uint32_t target_ = 0;
  std::optional<Tick> converged_;
};

}  // namespace minios::sim
