#include "minios/fatimg.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cstring>
#include <optional>

namespace minios::fatimg {

namespace {

constexpr std::uint32_t kSector = 512;
constexpr std::uint32_t kReserved = 1;
constexpr std::uint32_t kFats = 2;
constexpr std::uint32_t kFat16Max = 65524;

std::uint32_t fat_bytes(fatro::FatType t, std::uint32_t clusters) {
  return t == fatro::FatType::Fat12 ? ((clusters + 2) * 3 + 1) / 2 : (clusters + 2) * 2;
}

struct Try {
  bool ok = false;
  std::uint32_t fat_sectors = 0;
  std::uint32_t clusters = 0;
};

// Smallest FAT size that covers the clusters left after placing it.
Try fit(fatro::FatType t, std::uint32_t total, std::uint32_t root_sectors, std::uint32_t spc,
        std::uint32_t min_fat = 1) {
  for (std::uint32_t f = min_fat; f < total; ++f) {
    const std::int64_t data = std::int64_t{total} - kReserved - kFats * f - root_sectors;
    if (data < spc) return {};
    const auto clusters = static_cast<std::uint32_t>(data / spc);
    if (fat_bytes(t, clusters) <= f * kSector) return {true, f, clusters};
  }
  return {};
}

std::optional<Layout> plan_for(std::uint32_t total, std::uint32_t root_sectors, std::uint32_t spc) {
  using fatro::FatType;
  if (auto a = fit(FatType::Fat12, total, root_sectors, spc); a.ok && a.clusters < fatro::kFat12Threshold)
    return Layout{FatType::Fat12, spc, a.fat_sectors, a.clusters};
  auto b = fit(FatType::Fat16, total, root_sectors, spc);
  if (!b.ok) return std::nullopt;
  if (b.clusters >= fatro::kFat12Threshold && b.clusters <= kFat16Max)
    return Layout{FatType::Fat16, spc, b.fat_sectors, b.clusters};
  if (b.clusters < fatro::kFat12Threshold) {
    // Between the two rules: pad a FAT12 table until the count drops under the threshold.
    for (std::uint32_t f = b.fat_sectors;; ++f) {
      auto c = fit(FatType::Fat12, total, root_sectors, spc, f);
      if (!c.ok) return std::nullopt;
      if (c.clusters < fatro::kFat12Threshold) return Layout{FatType::Fat12, spc, c.fat_sectors, c.clusters};
    }
  }
  return std::nullopt;
}

void put16(std::uint8_t* p, std::uint32_t v) {
  p[0] = static_cast<std::uint8_t>(v);
  p[1] = static_cast<std::uint8_t>(v >> 8);
}
void put32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::vector<std::string> split(std::string_view p) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i <= p.size()) {
    auto j = p.find('/', i);
    if (j == std::string_view::npos) j = p.size();
    if (j > i) out.emplace_back(p.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

}  // namespace

std::uint32_t parse_size(std::string_view text) {
  if (text.empty()) throw BuildError("empty size");
  std::uint64_t mult = 1;
  const char suffix = static_cast<char>(std::toupper(static_cast<unsigned char>(text.back())));
  if (suffix == 'K' || suffix == 'M') {
    mult = suffix == 'K' ? 1024 : 1024 * 1024;
    text.remove_suffix(1);
  }
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size()) throw BuildError("bad size '" + std::string(text) + "'");
  v *= mult;
  if (v > 512ULL * 1024 * 1024) throw BuildError("image too large");
  return static_cast<std::uint32_t>(v);
}

Layout plan_layout(const ImageOptions& opts) {
  if (opts.size_bytes < kMinImageBytes) throw BuildError("image size must be at least 64K");
  if (opts.size_bytes % kSector != 0) throw BuildError("image size must be a multiple of 512");
  if (opts.root_entries == 0 || opts.root_entries % 16 != 0) throw BuildError("root entries must be a multiple of 16");
  const std::uint32_t total = opts.size_bytes / kSector;
  const std::uint32_t root_sectors = opts.root_entries * 32 / kSector;
  if (opts.sectors_per_cluster != 0) {
    const std::uint32_t spc = opts.sectors_per_cluster;
    if ((spc & (spc - 1)) != 0 || spc > 128) throw BuildError("sectors per cluster must be a power of two");
    if (auto l = plan_for(total, root_sectors, spc)) return *l;
    throw BuildError("no FAT12/16 layout with that cluster size");
  }
  for (std::uint32_t spc = 1; spc <= 128; spc *= 2)
    if (auto l = plan_for(total, root_sectors, spc)) return *l;
  throw BuildError("no FAT12/16 layout for this size");
}

std::size_t ImageBuilder::ensure_dir(const std::vector<std::string>& parts) {
  std::size_t cur = 0;
  for (const auto& part : parts) {
    auto sn = fatro::to_short_name(part);
    if (!sn) throw BuildError("name not 8.3 representable: " + part);
    auto& kids = nodes_[cur].children;
    auto it = std::find_if(kids.begin(), kids.end(),
                           [&](std::size_t k) { return nodes_[k].short_name == *sn; });
    if (it != kids.end()) {
      if (!nodes_[*it].dir) throw BuildError("path component is a file: " + part);
      cur = *it;
      continue;
    }
    nodes_.push_back(Node{*sn, true, {}, {}});
    const std::size_t idx = nodes_.size() - 1;
    nodes_[cur].children.push_back(idx);
    cur = idx;
  }
  return cur;
}

void ImageBuilder::add_dir(std::string_view path) {
  auto parts = split(path);
  if (parts.empty()) throw BuildError("empty directory path");
  ensure_dir(parts);
}

void ImageBuilder::add_file(std::string_view path, std::vector<std::uint8_t> bytes) {
  auto parts = split(path);
  if (parts.empty()) throw BuildError("empty file path");
  const std::string leaf = parts.back();
  parts.pop_back();
  const std::size_t parent = ensure_dir(parts);
  auto sn = fatro::to_short_name(leaf);
  if (!sn) throw BuildError("name not 8.3 representable: " + leaf);
  for (std::size_t k : nodes_[parent].children)
    if (nodes_[k].short_name == *sn) throw BuildError("duplicate name: " + leaf);
  nodes_.push_back(Node{*sn, false, std::move(bytes), {}});
  nodes_[parent].children.push_back(nodes_.size() - 1);
}

void ImageBuilder::add_file(std::string_view path, std::string_view text) {
  add_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::vector<std::uint8_t> ImageBuilder::build() const {
  const Layout lay = plan_layout(opts_);
  const std::uint32_t total = opts_.size_bytes / kSector;
  const std::uint32_t root_sectors = opts_.root_entries * 32u / kSector;
  const std::uint32_t fat_start = kReserved;
  const std::uint32_t root_start = fat_start + kFats * lay.fat_sectors;
  const std::uint32_t data_start = root_start + root_sectors;
  const std::uint32_t cb = lay.sectors_per_cluster * kSector;

  std::vector<std::uint8_t> img(opts_.size_bytes, 0);
  std::vector<std::uint32_t> fat(lay.cluster_count + 2, 0);
  fat[0] = lay.type == fatro::FatType::Fat12 ? 0xFF8 : 0xFFF8;
  fat[1] = lay.type == fatro::FatType::Fat12 ? 0xFFF : 0xFFFF;
  const std::uint32_t eoc = fat[1];
  std::uint32_t next_free = 2;

  auto allocate = [&](std::uint32_t bytes) -> std::vector<std::uint32_t> {
    if (bytes == 0) return {};
    const std::uint32_t n = (bytes + cb - 1) / cb;
    if (next_free + n > lay.cluster_count + 2) throw BuildError("image full");
    std::vector<std::uint32_t> run(n);
    for (std::uint32_t i = 0; i < n; ++i) run[i] = next_free + i;
    if (opts_.fragment) std::reverse(run.begin(), run.end());
    for (std::uint32_t i = 0; i < n; ++i) fat[run[i]] = i + 1 < n ? run[i + 1] : eoc;
    next_free += n;
    return run;
  };
  auto cluster_ptr = [&](std::uint32_t c) {
    return img.data() + (std::size_t{data_start} + std::size_t{c - 2} * lay.sectors_per_cluster) * kSector;
  };
  auto write_entry = [](std::uint8_t* e, std::string_view name11, std::uint8_t a,
                        std::uint32_t cluster, std::uint32_t size) {
    std::memcpy(e, name11.data(), 11);
    e[11] = a;
    put16(e + 22, 0);       // time
    put16(e + 24, 0x5821);  // 2024-01-01
    put16(e + 16, 0x5821);
    put16(e + 18, 0x5821);
    put16(e + 26, cluster);
    put32(e + 28, size);
  };

  if (nodes_[0].children.size() + (opts_.volume_label.empty() ? 0 : 1) > opts_.root_entries)
    throw BuildError("too many root entries");

  // Allocate clusters depth-first in insertion order, then fill.
  clusters_.clear();
  std::vector<std::uint32_t> first(nodes_.size(), 0);
  std::vector<std::vector<std::uint32_t>> runs(nodes_.size());
  std::vector<std::string> paths(nodes_.size());
  std::vector<std::size_t> order{0};
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t idx = order[i];
    const Node& n = nodes_[idx];
    for (std::size_t k : n.children) {
      paths[k] = (paths[idx].empty() ? "" : paths[idx] + "/") + fatro::from_short_name(nodes_[k].short_name);
      const Node& child = nodes_[k];
      const std::uint32_t bytes = child.dir ? static_cast<std::uint32_t>((child.children.size() + 2) * 32)
                                            : static_cast<std::uint32_t>(child.bytes.size());
      runs[k] = allocate(bytes);
      first[k] = runs[k].empty() ? 0 : runs[k].front();
      clusters_[paths[k]] = first[k];
      if (child.dir) order.push_back(k);
    }
  }

  auto scatter = [&](const std::vector<std::uint32_t>& run, const std::vector<std::uint8_t>& bytes) {
    for (std::size_t i = 0; i < run.size(); ++i) {
      const std::size_t off = i * cb;
      const std::size_t len = std::min<std::size_t>(cb, bytes.size() - off);
      std::memcpy(cluster_ptr(run[i]), bytes.data() + off, len);
    }
  };

  for (std::size_t idx = 0; idx < nodes_.size(); ++idx) {
    const Node& n = nodes_[idx];
    if (!n.dir) {
      scatter(runs[idx], n.bytes);
      continue;
    }
    std::vector<std::uint8_t> dir_buf((n.children.size() + 3) * 32, 0);
    std::uint8_t* dir = idx == 0 ? img.data() + std::size_t{root_start} * kSector : dir_buf.data();
    std::size_t slot = 0;
    if (idx == 0) {
      if (!opts_.volume_label.empty()) {
        std::string label = opts_.volume_label.substr(0, 11);
        for (auto& c : label) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        label.resize(11, ' ');
        write_entry(dir + 32 * slot++, label, fatro::attr::VolumeLabel, 0, 0);
      }
    } else {
      std::size_t parent = 0;
      for (std::size_t p = 0; p < nodes_.size(); ++p)
        if (std::find(nodes_[p].children.begin(), nodes_[p].children.end(), idx) != nodes_[p].children.end())
          parent = p;
      write_entry(dir + 32 * slot++, ".          ", fatro::attr::Directory, first[idx], 0);
      write_entry(dir + 32 * slot++, "..         ", fatro::attr::Directory, parent == 0 ? 0 : first[parent], 0);
    }
    for (std::size_t k : n.children) {
      const Node& c = nodes_[k];
      write_entry(dir + 32 * slot++, c.short_name, c.dir ? fatro::attr::Directory : fatro::attr::Archive,
                  first[k], c.dir ? 0 : static_cast<std::uint32_t>(c.bytes.size()));
    }
    if (idx != 0) scatter(runs[idx], dir_buf);
  }

  // Boot sector.
  std::uint8_t* b = img.data();
  b[0] = 0xEB;
  b[1] = 0x3C;
  b[2] = 0x90;
  std::memcpy(b + 3, "MINIOS  ", 8);
  put16(b + 11, kSector);
  b[13] = static_cast<std::uint8_t>(lay.sectors_per_cluster);
  put16(b + 14, kReserved);
  b[16] = kFats;
  put16(b + 17, opts_.root_entries);
  put16(b + 19, total < 0x10000 ? total : 0);
  b[21] = 0xF8;
  put16(b + 22, lay.fat_sectors);
  put16(b + 24, 32);
  put16(b + 26, 2);
  put32(b + 28, 0);
  put32(b + 32, total < 0x10000 ? 0 : total);
  b[36] = 0x80;
  b[38] = 0x29;
  put32(b + 39, opts_.volume_id);
  std::string label = opts_.volume_label.empty() ? "NO NAME" : opts_.volume_label.substr(0, 11);
  for (auto& c : label) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  label.resize(11, ' ');
  std::memcpy(b + 43, label.data(), 11);
  std::memcpy(b + 54, lay.type == fatro::FatType::Fat12 ? "FAT12   " : "FAT16   ", 8);
  b[510] = 0x55;
  b[511] = 0xAA;

  // FAT copies.
  for (std::uint32_t copy = 0; copy < kFats; ++copy) {
    std::uint8_t* f = img.data() + std::size_t{fat_start + copy * lay.fat_sectors} * kSector;
    for (std::uint32_t c = 0; c < fat.size(); ++c) {
      if (lay.type == fatro::FatType::Fat16) {
        put16(f + 2 * c, fat[c]);
      } else {
        std::uint8_t* p = f + c * 3 / 2;
        if (c & 1) {
          p[0] = static_cast<std::uint8_t>((p[0] & 0x0F) | ((fat[c] << 4) & 0xF0));
          p[1] = static_cast<std::uint8_t>(fat[c] >> 4);
        } else {
          p[0] = static_cast<std::uint8_t>(fat[c]);
          p[1] = static_cast<std::uint8_t>((p[1] & 0xF0) | ((fat[c] >> 8) & 0x0F));
        }
      }
    }
  }
  return img;
}

}  // namespace minios::fatimg
