#pragma once

// Reference FAT12/16 reader used as a test oracle. Written separately from
// the kernel driver: operates on the raw image, walks the tree recursively,
// and follows chains with a hop counter instead of a visited set.

#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace reffat {

struct Node {
  bool dir = false;
  std::vector<std::uint8_t> data;       // file bytes
  std::vector<std::string> children;    // names in on-disk order
};

struct Volume {
  int fat_bits = 0;
  unsigned spc = 0;
  std::map<std::string, Node> tree;  // "" is the root, "DIR/FILE.TXT" otherwise
  std::string error;                 // non-empty when something was corrupt
};

namespace detail {

inline unsigned u16(const std::vector<std::uint8_t>& img, std::size_t at) {
  return img[at] | (img[at + 1] << 8);
}
inline unsigned long u32(const std::vector<std::uint8_t>& img, std::size_t at) {
  return (unsigned long)img[at] | ((unsigned long)img[at + 1] << 8) |
         ((unsigned long)img[at + 2] << 16) | ((unsigned long)img[at + 3] << 24);
}

struct Ctx {
  const std::vector<std::uint8_t>* img;
  unsigned bps, spc, fat_off, root_off, root_bytes, data_off, nclusters;
  int bits;
};

inline long next_of(const Ctx& c, unsigned cl) {
  const auto& img = *c.img;
  unsigned v;
  if (c.bits == 16) {
    v = u16(img, c.fat_off + cl * 2);
    if (v >= 0xFFF8) return -1;
    if (v == 0xFFF7) return -2;
  } else {
    unsigned at = c.fat_off + cl + cl / 2;
    unsigned w = u16(img, at);
    v = (cl % 2) ? (w >> 4) : (w & 0xFFF);
    if (v >= 0xFF8) return -1;
    if (v == 0xFF7) return -2;
  }
  if (v < 2 || v >= c.nclusters + 2) return -2;
  return v;
}

// Concatenated cluster contents; limit bounds the number of hops.
inline bool gather(const Ctx& c, unsigned first, std::vector<std::uint8_t>& out, unsigned long want) {
  const unsigned cbytes = c.bps * c.spc;
  unsigned long hops = 0;
  long cl = first;
  while (cl >= 2) {
    if (++hops > c.nclusters) return false;
    if ((unsigned)cl >= c.nclusters + 2) return false;
    std::size_t at = c.data_off + (std::size_t)(cl - 2) * cbytes;
    out.insert(out.end(), c.img->begin() + at, c.img->begin() + at + cbytes);
    if (out.size() >= want) break;
    cl = next_of(c, (unsigned)cl);
    if (cl == -2) return false;
  }
  return out.size() >= want;
}

inline std::string pretty(const std::uint8_t* e) {
  std::string b((const char*)e, 8), x((const char*)e + 8, 3);
  while (!b.empty() && b.back() == ' ') b.pop_back();
  while (!x.empty() && x.back() == ' ') x.pop_back();
  return x.empty() ? b : b + "." + x;
}

inline void walk(const Ctx& c, const std::vector<std::uint8_t>& raw, const std::string& path, Volume& v,
                 int depth) {
  Node& me = v.tree[path];
  me.dir = true;
  if (depth > 16) {
    v.error = "too deep";
    return;
  }
  for (std::size_t i = 0; i + 32 <= raw.size(); i += 32) {
    const std::uint8_t* e = &raw[i];
    if (e[0] == 0) break;
    if (e[0] == 0xE5) continue;
    if ((e[11] & 0x3F) == 0x0F) continue;
    if (e[11] & 0x08) continue;
    std::string name = pretty(e);
    if (name == "." || name == "..") continue;
    std::string child = path.empty() ? name : path + "/" + name;
    v.tree[path].children.push_back(name);
    unsigned first = u16(raw, i + 26);
    unsigned long size = u32(raw, i + 28);
    if (e[11] & 0x10) {
      std::vector<std::uint8_t> sub;
      if (!gather(c, first, sub, 1)) {
        v.error = "bad directory chain at " + child;
        v.tree[child].dir = true;
        continue;
      }
      // gather stops after the first cluster when want=1; read the whole chain.
      sub.clear();
      gather(c, first, sub, ~0UL);
      walk(c, sub, child, v, depth + 1);
    } else {
      Node n;
      if (size > 0) {
        std::vector<std::uint8_t> bytes;
        if (!gather(c, first, bytes, size)) {
          v.error = "bad file chain at " + child;
        } else {
          bytes.resize(size);
          n.data = bytes;
        }
      }
      v.tree[child] = n;
    }
  }
}

}  // namespace detail

inline std::optional<Volume> open(const std::vector<std::uint8_t>& img) {
  using namespace detail;
  if (img.size() < 512 || img[510] != 0x55 || img[511] != 0xAA) return std::nullopt;
  Ctx c{};
  c.img = &img;
  c.bps = u16(img, 11);
  c.spc = img[13];
  unsigned reserved = u16(img, 14);
  unsigned nfats = img[16];
  unsigned rootents = u16(img, 17);
  unsigned long total = u16(img, 19);
  if (total == 0) total = u32(img, 32);
  unsigned fatsz = u16(img, 22);
  if (c.bps != 512 || c.spc == 0) return std::nullopt;
  c.fat_off = reserved * c.bps;
  c.root_off = c.fat_off + nfats * fatsz * c.bps;
  c.root_bytes = rootents * 32;
  c.data_off = c.root_off + ((c.root_bytes + c.bps - 1) / c.bps) * c.bps;
  c.nclusters = (unsigned)((total * c.bps - c.data_off) / (c.bps * c.spc));
  c.bits = c.nclusters < 4085 ? 12 : 16;
  Volume v;
  v.fat_bits = c.bits;
  v.spc = c.spc;
  std::vector<std::uint8_t> root(img.begin() + c.root_off, img.begin() + c.root_off + c.root_bytes);
  walk(c, root, "", v, 0);
  return v;
}

}  // namespace reffat
