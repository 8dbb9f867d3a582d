#include "minios/net.hpp"

#include <algorithm>

namespace minios::net {

std::string_view to_string(Disposition d) {
  switch (d) {
    case Disposition::Consistent: return "Consistent";
    case Disposition::AdoptNewer: return "AdoptNewer";
    case Disposition::AnnounceOlderHeard: return "AnnounceOlderHeard";
    case Disposition::Malformed: return "Malformed";
  }
  return "?";
}

std::uint64_t node_seed(std::uint64_t seed, std::uint16_t node) {
  return seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(node) + 1));
}

std::vector<std::uint8_t> encode_payload(std::uint32_t version, std::span<const std::uint8_t> data) {
  std::vector<std::uint8_t> out(4);
  for (int i = 0; i < 4; ++i) out[i] = static_cast<std::uint8_t>(version >> (8 * i));
  out.insert(out.end(), data.begin(), data.end());
  return out;
}

Trickle::Trickle(TrickleParams p, std::uint64_t seed) : p_(p), rng_(seed), i_(p.i_min) {}

void Trickle::begin_interval(Tick now) {
  start_ = now;
  const Tick half = i_ / 2;
  t_ = half + rng_.below(i_ - half);
  c_ = 0;
  fired_ = false;
}

void Trickle::start(Tick now) {
  i_ = p_.i_min;
  begin_interval(now);
}

void Trickle::reset(Tick now) {
  ++resets_;
  i_ = p_.i_min;
  begin_interval(now);
}

std::optional<std::vector<std::uint8_t>> Trickle::on_tick(Tick now) {
  std::optional<std::vector<std::uint8_t>> out;
  if (!fired_ && now >= start_ + t_) {
    fired_ = true;
    if (c_ < p_.k)
      out = encode_payload(version_, data_);
    else
      ++suppressed_;
  }
  if (now >= start_ + i_) {
    i_ = std::min(i_ * 2, p_.i_max());
    begin_interval(now);
  }
  return out;
}

Disposition Trickle::on_frame(std::span<const std::uint8_t> payload, Tick now) {
  if (payload.size() < 4) return Disposition::Malformed;
  const std::uint32_t v = payload[0] | (payload[1] << 8) | (payload[2] << 16) |
                          (static_cast<std::uint32_t>(payload[3]) << 24);
  if (v == version_) {
    ++c_;
    return Disposition::Consistent;
  }
  if (v > version_) {
    version_ = v;
    data_.assign(payload.begin() + 4, payload.end());
    if (data_.size() > kMaxTricklePayload) data_.resize(kMaxTricklePayload);
    reset(now);
    return Disposition::AdoptNewer;
  }
  if (i_ != p_.i_min) reset(now);
  return Disposition::AnnounceOlderHeard;
}

void Trickle::init(std::uint32_t version, std::vector<std::uint8_t> data) {
  version_ = version;
  data_ = std::move(data);
  if (data_.size() > kMaxTricklePayload) data_.resize(kMaxTricklePayload);
}

void Trickle::set_value(std::uint32_t version, std::vector<std::uint8_t> data, Tick now) {
  version_ = version;
  data_ = std::move(data);
  if (data_.size() > kMaxTricklePayload) data_.resize(kMaxTricklePayload);
  reset(now);
}

NetStack::NetStack(TrickleParams p, std::uint64_t seed, std::uint16_t address)
    : trickle(p, seed), address_(address) {}

void NetStack::on_tick(Tick now, periph::RadioPort& radio) {
  if (auto payload = trickle.on_tick(now)) {
    mesh::Frame f;
    f.src = address_;
    f.dst = mesh::kBroadcast;
    f.seq = seq_++;
    f.kind = mesh::FrameKind::Trickle;
    f.payload = std::move(*payload);
    radio.send(std::move(f));
    ++stats.tx;
  }
}

std::optional<mesh::Frame> NetStack::on_frame(const mesh::Frame& f, Tick now) {
  ++stats.rx;
  if (f.kind == mesh::FrameKind::Trickle) {
    trickle.on_frame(f.payload, now);
    return std::nullopt;
  }
  return f;
}

int NetStack::net_write(mesh::Frame f, periph::RadioPort& radio) {
  if (!f.valid()) return -1;
  f.src = address_;
  f.kind = mesh::FrameKind::App;
  radio.send(std::move(f));
  ++stats.tx;
  return 0;
}

std::string NetStack::report() const {
  return "tx=" + std::to_string(stats.tx) + " rx=" + std::to_string(stats.rx) +
         " suppressed=" + std::to_string(trickle.suppressed()) + " resets=" + std::to_string(trickle.resets()) +
         " version=" + std::to_string(trickle.version()) + " interval=" + std::to_string(trickle.interval());
}

}  // namespace minios::net
