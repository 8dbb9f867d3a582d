#pragma once

// Read-only FAT12/16 driver over a BlockDevice.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "minios/periph.hpp"

namespace minios::fatro {

enum class FatType : std::uint8_t { Fat12, Fat16 };

enum class FsErrc : std::uint8_t { NotFound, NotADirectory, NotAFile, Corrupt, BadVolume };

std::string_view to_string(FsErrc e);

class FsError : public std::runtime_error {
 public:
  FsError(FsErrc code, const std::string& detail);
  FsErrc code() const { return code_; }

 private:
  FsErrc code_;
};

namespace attr {
inline constexpr std::uint8_t ReadOnly = 0x01;
inline constexpr std::uint8_t Hidden = 0x02;
inline constexpr std::uint8_t System = 0x04;
inline constexpr std::uint8_t VolumeLabel = 0x08;
inline constexpr std::uint8_t Directory = 0x10;
inline constexpr std::uint8_t Archive = 0x20;
inline constexpr std::uint8_t Lfn = 0x0F;
}  // namespace attr

struct DirEntry {
  std::string name;  // "NAME.EXT" uppercase, no padding
  std::uint8_t attr = 0;
  std::uint32_t first_cluster = 0;
  std::uint32_t size = 0;

  bool is_dir() const { return (attr & attr::Directory) != 0; }
  bool operator==(const DirEntry&) const = default;
};

/// "readme.txt" -> "README  TXT". Empty result if not 8.3 representable.
std::optional<std::string> to_short_name(std::string_view name);
/// "README  TXT" -> "README.TXT".
std::string from_short_name(std::string_view raw11);

struct Geometry {
  FatType type = FatType::Fat12;
  std::uint32_t bytes_per_sector = 512;
  std::uint32_t sectors_per_cluster = 1;
  std::uint32_t fat_start = 0;
  std::uint32_t fat_sectors = 0;
  std::uint32_t fat_count = 0;
  std::uint32_t root_start = 0;
  std::uint32_t root_entries = 0;
  std::uint32_t data_start = 0;
  std::uint32_t total_sectors = 0;
  std::uint32_t cluster_count = 0;

  std::uint32_t cluster_bytes() const { return bytes_per_sector * sectors_per_cluster; }
};

inline constexpr std::uint32_t kFat12Threshold = 4085;

class FatVolume {
 public:
  /// The device must outlive the volume. Throws FsError(BadVolume).
  static FatVolume mount(const periph::BlockDevice& dev);

  const Geometry& geometry() const { return geo_; }
  FatType type() const { return geo_.type; }
  std::string volume_label() const { return label_; }

  /// Entries in on-disk order, skipping deleted, LFN, volume label, "." and "..".
  std::vector<DirEntry> readdir(std::string_view path = "") const;
  DirEntry stat(std::string_view path) const;
  /// min(len, size - offset) bytes; offset past the end yields nothing.
  std::vector<std::uint8_t> read(std::string_view path, std::uint32_t offset,
                                 std::uint32_t len) const;
  std::vector<std::uint8_t> read_all(std::string_view path) const;
  std::vector<std::uint8_t> read_entry(const DirEntry& e, std::uint32_t offset,
                                       std::uint32_t len) const;

  void cd(std::string_view path);
  /// "/" or "/DIR/SUB".
  std::string cwd() const;

  /// Next cluster in the chain, or nullopt at end-of-chain. Throws Corrupt
  /// for free/bad/out-of-range entries.
  std::optional<std::uint32_t> next_cluster(std::uint32_t cluster) const;
  std::uint32_t fat_entry(std::uint32_t cluster) const;

  /// Clusters whose FAT entries were consulted by the last read (testing aid).
  std::uint64_t last_chain_steps() const { return chain_steps_; }

 private:
  struct Location {
    bool root = true;
    std::uint32_t cluster = 0;
  };
  struct Resolved {
    DirEntry entry;
    bool is_root = false;
    std::vector<std::string> path;  // canonical components
  };

  explicit FatVolume(const periph::BlockDevice& dev) : dev_(&dev) {}

  std::vector<std::uint8_t> dir_bytes(Location loc) const;
  std::vector<DirEntry> list(Location loc, bool keep_dots) const;
  std::vector<std::uint32_t> chain(std::uint32_t first, std::uint64_t max_clusters) const;
  Resolved resolve(std::string_view path) const;
  std::vector<std::uint8_t> read_clusters(std::uint32_t first, std::uint32_t offset,
                                          std::uint32_t len) const;

  const periph::BlockDevice* dev_;
  Geometry geo_;
  std::vector<std::uint8_t> fat_;
  std::string label_;
  std::vector<std::string> cwd_path_;
  Location cwd_;
  mutable std::uint64_t chain_steps_ = 0;
};

}  // namespace minios::fatro
