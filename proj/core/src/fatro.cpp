#include "minios/fatro.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace minios::fatro {

std::string_view to_string(FsErrc e) {
  switch (e) {
    case FsErrc::NotFound: return "not found";
    case FsErrc::NotADirectory: return "not a directory";
    case FsErrc::NotAFile: return "is a directory";
    case FsErrc::Corrupt: return "corrupt volume";
    case FsErrc::BadVolume: return "no filesystem";
  }
  return "fs error";
}

FsError::FsError(FsErrc code, const std::string& detail)
    : std::runtime_error(detail.empty() ? std::string(to_string(code))
                                        : std::string(to_string(code)) + ": " + detail),
      code_(code) {}

namespace {

std::uint16_t le16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | p[1] << 8); }
std::uint32_t le32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 |
         std::uint32_t{p[3]} << 24;
}

bool valid_83_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  if (std::isalnum(u)) return true;
  return std::string_view("!#$%&'()-@^_`{}~").find(c) != std::string_view::npos;
}

std::vector<std::string> split_path(std::string_view p) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < p.size()) {
    std::size_t j = p.find('/', i);
    if (j == std::string_view::npos) j = p.size();
    if (j > i) parts.emplace_back(p.substr(i, j - i));
    i = j + 1;
  }
  return parts;
}

}  // namespace

std::optional<std::string> to_short_name(std::string_view name) {
  if (name.empty() || name == "." || name == "..") return std::nullopt;
  const auto dot = name.find('.');
  std::string_view base = name.substr(0, dot);
  std::string_view ext = dot == std::string_view::npos ? std::string_view{} : name.substr(dot + 1);
  if (base.empty() || base.size() > 8 || ext.size() > 3) return std::nullopt;
  if (ext.find('.') != std::string_view::npos) return std::nullopt;
  if (dot != std::string_view::npos && ext.empty()) return std::nullopt;
  std::string out(11, ' ');
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (!valid_83_char(base[i])) return std::nullopt;
    out[i] = static_cast<char>(std::toupper(static_cast<unsigned char>(base[i])));
  }
  for (std::size_t i = 0; i < ext.size(); ++i) {
    if (!valid_83_char(ext[i])) return std::nullopt;
    out[8 + i] = static_cast<char>(std::toupper(static_cast<unsigned char>(ext[i])));
  }
  return out;
}

std::string from_short_name(std::string_view raw) {
  std::string base(raw.substr(0, 8));
  std::string ext(raw.substr(8, 3));
  while (!base.empty() && base.back() == ' ') base.pop_back();
  while (!ext.empty() && ext.back() == ' ') ext.pop_back();
  if (!base.empty() && base[0] == '\x05') base[0] = '\xE5';
  return ext.empty() ? base : base + "." + ext;
}

FatVolume FatVolume::mount(const periph::BlockDevice& dev) {
  FatVolume v(dev);
  if (dev.sector_count() == 0) throw FsError(FsErrc::BadVolume, "empty device");
  const auto boot = dev.read_sector(0);
  const std::uint8_t* b = boot.data();
  if (b[510] != 0x55 || b[511] != 0xAA) throw FsError(FsErrc::BadVolume, "bad boot signature");
  Geometry& g = v.geo_;
  g.bytes_per_sector = le16(b + 11);
  g.sectors_per_cluster = b[13];
  const std::uint32_t reserved = le16(b + 14);
  g.fat_count = b[16];
  g.root_entries = le16(b + 17);
  g.total_sectors = le16(b + 19);
  if (g.total_sectors == 0) g.total_sectors = le32(b + 32);
  g.fat_sectors = le16(b + 22);
  if (g.bytes_per_sector != 512) throw FsError(FsErrc::BadVolume, "unsupported sector size");
  const auto spc = g.sectors_per_cluster;
  if (spc == 0 || (spc & (spc - 1)) != 0) throw FsError(FsErrc::BadVolume, "bad cluster size");
  if (reserved == 0 || g.fat_count == 0 || g.fat_sectors == 0 || g.root_entries == 0)
    throw FsError(FsErrc::BadVolume, "bad BPB");
  g.fat_start = reserved;
  g.root_start = g.fat_start + g.fat_count * g.fat_sectors;
  const std::uint32_t root_sectors = (g.root_entries * 32 + 511) / 512;
  g.data_start = g.root_start + root_sectors;
  if (g.total_sectors > dev.sector_count() || g.data_start >= g.total_sectors)
    throw FsError(FsErrc::BadVolume, "geometry exceeds device");
  g.cluster_count = (g.total_sectors - g.data_start) / spc;
  g.type = g.cluster_count < kFat12Threshold ? FatType::Fat12 : FatType::Fat16;
  if (g.cluster_count > 65524) throw FsError(FsErrc::BadVolume, "FAT32 not supported");

  v.fat_.reserve(std::size_t{g.fat_sectors} * 512);
  for (std::uint32_t s = 0; s < g.fat_sectors; ++s) {
    const auto sec = dev.read_sector(g.fat_start + s);
    v.fat_.insert(v.fat_.end(), sec.begin(), sec.end());
  }
  const std::size_t need = g.type == FatType::Fat12 ? (std::size_t{g.cluster_count} + 2) * 3 / 2 + 1
                                                    : (std::size_t{g.cluster_count} + 2) * 2;
  if (v.fat_.size() < need) throw FsError(FsErrc::BadVolume, "FAT too small");

  // Volume label from the root directory, if any.
  const auto root = v.dir_bytes({true, 0});
  for (std::size_t off = 0; off + 32 <= root.size(); off += 32) {
    const std::uint8_t* e = root.data() + off;
    if (e[0] == 0) break;
    if (e[0] == 0xE5 || e[11] == attr::Lfn) continue;
    if (e[11] & attr::VolumeLabel) {
      std::string l(reinterpret_cast<const char*>(e), 11);
      while (!l.empty() && l.back() == ' ') l.pop_back();
      v.label_ = l;
      break;
    }
  }
  return v;
}

std::uint32_t FatVolume::fat_entry(std::uint32_t cluster) const {
  if (geo_.type == FatType::Fat16) {
    const std::size_t off = std::size_t{cluster} * 2;
    return le16(fat_.data() + off);
  }
  const std::size_t off = std::size_t{cluster} * 3 / 2;
  const std::uint16_t pair = le16(fat_.data() + off);
  return (cluster & 1) ? pair >> 4 : pair & 0x0FFF;
}

std::optional<std::uint32_t> FatVolume::next_cluster(std::uint32_t cluster) const {
  if (cluster < 2 || cluster >= geo_.cluster_count + 2)
    throw FsError(FsErrc::Corrupt, "cluster " + std::to_string(cluster) + " out of range");
  ++chain_steps_;
  const std::uint32_t v = fat_entry(cluster);
  const std::uint32_t eoc = geo_.type == FatType::Fat16 ? 0xFFF8 : 0xFF8;
  const std::uint32_t bad = eoc - 1;
  if (v >= eoc) return std::nullopt;
  if (v == bad || v < 2 || v >= geo_.cluster_count + 2)
    throw FsError(FsErrc::Corrupt, "bad chain link at cluster " + std::to_string(cluster));
  return v;
}

std::vector<std::uint32_t> FatVolume::chain(std::uint32_t first, std::uint64_t max_clusters) const {
  std::vector<std::uint32_t> out;
  std::unordered_set<std::uint32_t> seen;
  std::optional<std::uint32_t> c = first;
  while (c && out.size() < max_clusters) {
    if (!seen.insert(*c).second) throw FsError(FsErrc::Corrupt, "cluster chain loops");
    out.push_back(*c);
    if (out.size() == max_clusters) break;
    c = next_cluster(*c);
  }
  return out;
}

std::vector<std::uint8_t> FatVolume::dir_bytes(Location loc) const {
  std::vector<std::uint8_t> out;
  if (loc.root) {
    const std::uint32_t sectors = (geo_.root_entries * 32 + 511) / 512;
    for (std::uint32_t s = 0; s < sectors; ++s) {
      const auto sec = dev_->read_sector(geo_.root_start + s);
      out.insert(out.end(), sec.begin(), sec.end());
    }
    return out;
  }
  chain_steps_ = 0;
  for (std::uint32_t c : chain(loc.cluster, std::uint64_t{geo_.cluster_count} + 1)) {
    const std::uint32_t first = geo_.data_start + (c - 2) * geo_.sectors_per_cluster;
    for (std::uint32_t s = 0; s < geo_.sectors_per_cluster; ++s) {
      const auto sec = dev_->read_sector(first + s);
      out.insert(out.end(), sec.begin(), sec.end());
    }
  }
  return out;
}

std::vector<DirEntry> FatVolume::list(Location loc, bool keep_dots) const {
  const auto bytes = dir_bytes(loc);
  std::vector<DirEntry> out;
  for (std::size_t off = 0; off + 32 <= bytes.size(); off += 32) {
    const std::uint8_t* e = bytes.data() + off;
    if (e[0] == 0x00) break;
    if (e[0] == 0xE5) continue;
    const std::uint8_t a = e[11];
    if (a == attr::Lfn || (a & attr::VolumeLabel)) continue;
    DirEntry d;
    d.name = from_short_name(std::string_view(reinterpret_cast<const char*>(e), 11));
    d.attr = a;
    d.first_cluster = le16(e + 26);
    d.size = le32(e + 28);
    if (!keep_dots && (d.name == "." || d.name == "..")) continue;
    out.push_back(std::move(d));
  }
  return out;
}

FatVolume::Resolved FatVolume::resolve(std::string_view path) const {
  Resolved r;
  Location loc = cwd_;
  r.path = cwd_path_;
  if (!path.empty() && path.front() == '/') {
    loc = {true, 0};
    r.path.clear();
  }
  r.is_root = loc.root;
  r.entry.attr = attr::Directory;
  r.entry.first_cluster = loc.root ? 0 : loc.cluster;
  const auto parts = split_path(path);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& part = parts[i];
    if (part == ".") continue;
    if (!r.entry.is_dir()) throw FsError(FsErrc::NotADirectory, r.entry.name);
    if (part == ".." && loc.root) continue;
    std::optional<std::string> want;
    if (part != "..") {
      want = to_short_name(part);
      if (!want) throw FsError(FsErrc::NotFound, part);
    }
    const std::string display = want ? from_short_name(*want) : "..";
    const auto entries = list(loc, true);
    auto it = std::find_if(entries.begin(), entries.end(),
                           [&](const DirEntry& e) { return e.name == display; });
    if (it == entries.end()) throw FsError(FsErrc::NotFound, part);
    r.entry = *it;
    if (part == "..") {
      if (!r.path.empty()) r.path.pop_back();
    } else {
      r.path.push_back(it->name);
    }
    if (it->is_dir()) {
      loc = it->first_cluster == 0 ? Location{true, 0} : Location{false, it->first_cluster};
      r.is_root = loc.root;
      if (loc.root) r.entry.first_cluster = 0;
    } else {
      r.is_root = false;
    }
  }
  return r;
}

std::vector<DirEntry> FatVolume::readdir(std::string_view path) const {
  const Resolved r = resolve(path);
  if (!r.entry.is_dir()) throw FsError(FsErrc::NotADirectory, std::string(path));
  return list(r.is_root ? Location{true, 0} : Location{false, r.entry.first_cluster}, false);
}

DirEntry FatVolume::stat(std::string_view path) const { return resolve(path).entry; }

std::vector<std::uint8_t> FatVolume::read_clusters(std::uint32_t first, std::uint32_t offset,
                                                   std::uint32_t len) const {
  std::vector<std::uint8_t> out;
  if (len == 0) return out;
  const std::uint32_t cb = geo_.cluster_bytes();
  const std::uint64_t end = std::uint64_t{offset} + len;
  const std::uint64_t clusters = (end + cb - 1) / cb;
  chain_steps_ = 0;
  const auto ch = chain(first, clusters);
  if (ch.size() < clusters) throw FsError(FsErrc::Corrupt, "cluster chain shorter than file");
  out.reserve(len);
  for (std::uint64_t i = offset / cb; i < clusters; ++i) {
    const std::uint32_t sector0 = geo_.data_start + (ch[i] - 2) * geo_.sectors_per_cluster;
    for (std::uint32_t s = 0; s < geo_.sectors_per_cluster; ++s) {
      const std::uint64_t sec_start = i * cb + std::uint64_t{s} * 512;
      if (sec_start + 512 <= offset) continue;
      if (sec_start >= end) break;
      const auto sec = dev_->read_sector(sector0 + s);
      const std::uint64_t from = offset > sec_start ? offset - sec_start : 0;
      const std::uint64_t to = std::min<std::uint64_t>(512, end - sec_start);
      out.insert(out.end(), sec.begin() + static_cast<std::ptrdiff_t>(from),
                 sec.begin() + static_cast<std::ptrdiff_t>(to));
    }
  }
  return out;
}

std::vector<std::uint8_t> FatVolume::read_entry(const DirEntry& e, std::uint32_t offset,
                                                std::uint32_t len) const {
  if (e.is_dir()) throw FsError(FsErrc::NotAFile, e.name);
  if (offset >= e.size) return {};
  len = std::min(len, e.size - offset);
  if (e.first_cluster == 0) throw FsError(FsErrc::Corrupt, "non-empty file without clusters");
  return read_clusters(e.first_cluster, offset, len);
}

std::vector<std::uint8_t> FatVolume::read(std::string_view path, std::uint32_t offset,
                                          std::uint32_t len) const {
  return read_entry(stat(path), offset, len);
}

std::vector<std::uint8_t> FatVolume::read_all(std::string_view path) const {
  const DirEntry e = stat(path);
  return read_entry(e, 0, e.size);
}

void FatVolume::cd(std::string_view path) {
  const Resolved r = resolve(path);
  if (!r.entry.is_dir()) throw FsError(FsErrc::NotADirectory, std::string(path));
  cwd_ = r.is_root ? Location{true, 0} : Location{false, r.entry.first_cluster};
  cwd_path_ = r.is_root ? std::vector<std::string>{} : r.path;
}

std::string FatVolume::cwd() const {
  if (cwd_path_.empty()) return "/";
  std::string out;
  for (const auto& p : cwd_path_) out += "/" + p;
  return out;
}

}  // namespace minios::fatro
