#pragma once

// Network stack: Trickle dissemination of a versioned blob, frame
// counters for netstat, and the app-facing net_write path.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "minios/frame.hpp"
#include "minios/mesh.hpp"
#include "minios/periph.hpp"
#include "minios/types.hpp"

namespace minios::net {

inline constexpr std::size_t kMaxTricklePayload = 80;

struct TrickleParams {
  Tick i_min = 100;
  std::uint32_t doublings = 8;
  std::uint32_t k = 1;

  Tick i_max() const { return i_min << doublings; }
};

enum class Disposition : std::uint8_t { Consistent, AdoptNewer, AnnounceOlderHeard, Malformed };

std::string_view to_string(Disposition d);

/// Per-node RNG seed derived from the run seed and the node id.
std::uint64_t node_seed(std::uint64_t seed, std::uint16_t node);

/// version u32 little-endian, then data.
std::vector<std::uint8_t> encode_payload(std::uint32_t version, std::span<const std::uint8_t> data);

class Trickle {
 public:
  Trickle(TrickleParams p, std::uint64_t seed);

  /// Starts the first interval at `now` with i = i_min.
  void start(Tick now);
  /// Timer processing for tick `now`. Returns the frame payload to
  /// broadcast when the transmission point is reached with c < k.
  std::optional<std::vector<std::uint8_t>> on_tick(Tick now);
  Disposition on_frame(std::span<const std::uint8_t> payload, Tick now);
  /// Initial value before start(); not counted as a reset.
  void init(std::uint32_t version, std::vector<std::uint8_t> data);
  /// Local update (seeding a new version); resets the timer.
  void set_value(std::uint32_t version, std::vector<std::uint8_t> data, Tick now);

  const TrickleParams& params() const { return p_; }
  Tick interval() const { return i_; }
  Tick interval_start() const { return start_; }
  Tick t() const { return t_; }
  std::uint32_t c() const { return c_; }
  std::uint32_t version() const { return version_; }
  const std::vector<std::uint8_t>& data() const { return data_; }
  std::uint64_t suppressed() const { return suppressed_; }
  std::uint64_t resets() const { return resets_; }

 private:
  void begin_interval(Tick now);
  void reset(Tick now);

  TrickleParams p_;
  mesh::Rng rng_;
  Tick i_;
  Tick start_ = 0;
  Tick t_ = 0;
  bool fired_ = false;
  std::uint32_t c_ = 0;
  std::uint32_t version_ = 0;
  std::vector<std::uint8_t> data_;
  std::uint64_t suppressed_ = 0;
  std::uint64_t resets_ = 0;
};

struct NetStats {
  std::uint64_t tx = 0;
  std::uint64_t rx = 0;
};

class NetStack {
 public:
  NetStack(TrickleParams p, std::uint64_t seed, std::uint16_t address);

  Trickle trickle;
  NetStats stats;

  void start(Tick now) { trickle.start(now); }
  /// Trickle timer; sends through the radio when due.
  void on_tick(Tick now, periph::RadioPort& radio);
  /// Radio interrupt path. App frames are returned for the dispatcher.
  std::optional<mesh::Frame> on_frame(const mesh::Frame& f, Tick now);
  /// Returns 0, or -1 for an oversize payload.
  int net_write(mesh::Frame f, periph::RadioPort& radio);

  /// "tx=<n> rx=<n> suppressed=<n> resets=<n> version=<v> interval=<i>"
  std::string report() const;

 private:
  std::uint16_t address_;
  std::uint8_t seq_ = 0;
};

}  // namespace minios::net
