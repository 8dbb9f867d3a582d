#pragma once

// FAT12/16 image authoring (host side; the kernel only reads).

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "minios/fatro.hpp"

namespace minios::fatimg {

class BuildError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kMinImageBytes = 64 * 1024;

struct ImageOptions {
  std::uint32_t size_bytes = 1024 * 1024;
  std::uint8_t sectors_per_cluster = 0;  // 0 = smallest that fits the FAT type rule
  std::uint16_t root_entries = 512;
  std::string volume_label = "MINIOS";
  std::uint32_t volume_id = 0x4D494E49;
  bool fragment = false;  // link each run of clusters in descending order
};

/// "1M", "64K", "4194304" -> bytes. Throws BuildError.
std::uint32_t parse_size(std::string_view text);

class ImageBuilder {
 public:
  explicit ImageBuilder(ImageOptions opts = {}) : opts_(std::move(opts)) {}

  /// Path "DIR/NAME.EXT"; intermediate directories are created.
  void add_file(std::string_view path, std::vector<std::uint8_t> bytes);
  void add_file(std::string_view path, std::string_view text);
  void add_dir(std::string_view path);

  std::vector<std::uint8_t> build() const;

  /// First cluster of each path in the last build (testing aid).
  const std::map<std::string, std::uint32_t>& clusters() const { return clusters_; }

 private:
  struct Node {
    std::string short_name;  // 11 chars
    bool dir = false;
    std::vector<std::uint8_t> bytes;
    std::vector<std::size_t> children;  // indices into nodes_
  };

  std::size_t ensure_dir(const std::vector<std::string>& parts);

  ImageOptions opts_;
  std::vector<Node> nodes_{Node{"", true, {}, {}}};  // node 0 is the root
  mutable std::map<std::string, std::uint32_t> clusters_;
};

struct Layout {
  fatro::FatType type;
  std::uint32_t sectors_per_cluster;
  std::uint32_t fat_sectors;
  std::uint32_t cluster_count;
};

/// Geometry the builder would pick for these options.
Layout plan_layout(const ImageOptions& opts);

}  // namespace minios::fatimg
