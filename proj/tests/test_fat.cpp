#include <gtest/gtest.h>

#include <random>

#include "minios/fatimg.hpp"
#include "minios/fatro.hpp"
#include "support/ref_fat.hpp"

using namespace minios;
using namespace minios::fatro;

namespace {

std::vector<std::uint8_t> bytes_of(std::string_view s) { return {s.begin(), s.end()}; }

std::vector<std::uint8_t> standard_image() {
  fatimg::ImageBuilder b;
  b.add_file("HELLO.APP", std::vector<std::uint8_t>(300, 0xAB));
  b.add_file("README.TXT", std::string_view("minios"));
  return b.build();
}

std::vector<std::string> names(const std::vector<DirEntry>& es) {
  std::vector<std::string> out;
  for (const auto& e : es) out.push_back(e.name);
  return out;
}

// Sets FAT entry `cluster` to `value` in every FAT copy.
void patch_fat(std::vector<std::uint8_t>& img, std::uint32_t cluster, std::uint32_t value) {
  periph::BlockDevice dev(img);
  auto g = FatVolume::mount(dev).geometry();
  for (std::uint32_t copy = 0; copy < g.fat_count; ++copy) {
    std::uint8_t* f = img.data() + (g.fat_start + copy * g.fat_sectors) * 512;
    if (g.type == FatType::Fat16) {
      f[cluster * 2] = static_cast<std::uint8_t>(value);
      f[cluster * 2 + 1] = static_cast<std::uint8_t>(value >> 8);
    } else {
      std::uint8_t* p = f + cluster * 3 / 2;
      if (cluster & 1) {
        p[0] = static_cast<std::uint8_t>((p[0] & 0x0F) | (value << 4));
        p[1] = static_cast<std::uint8_t>(value >> 4);
      } else {
        p[0] = static_cast<std::uint8_t>(value);
        p[1] = static_cast<std::uint8_t>((p[1] & 0xF0) | ((value >> 8) & 0x0F));
      }
    }
  }
}

}  // namespace

TEST(ShortNames, Conversion) {
  EXPECT_EQ(to_short_name("readme.txt"), "README  TXT");
  EXPECT_EQ(to_short_name("HELLO.APP"), "HELLO   APP");
  EXPECT_EQ(to_short_name("DIR"), "DIR        ");
  EXPECT_FALSE(to_short_name("toolongname.txt"));
  EXPECT_FALSE(to_short_name("a.text"));
  EXPECT_FALSE(to_short_name("a b.txt"));
  EXPECT_FALSE(to_short_name("a.b.c"));
  EXPECT_EQ(from_short_name("README  TXT"), "README.TXT");
  EXPECT_EQ(from_short_name("DIR        "), "DIR");
}

TEST(Mount, StandardImage) {
  auto img = standard_image();
  periph::BlockDevice dev(img);
  auto vol = FatVolume::mount(dev);
  auto ref = reffat::open(img);
  ASSERT_TRUE(ref);
  EXPECT_EQ(vol.type(), ref->fat_bits == 12 ? FatType::Fat12 : FatType::Fat16);
  EXPECT_EQ(vol.geometry().sectors_per_cluster, ref->spc);
  const auto& g = vol.geometry();
  EXPECT_GT(g.data_start, g.root_start);
  EXPECT_GT(g.root_start, g.fat_start);
  EXPECT_GT(g.fat_start, 0u);
  EXPECT_EQ(vol.volume_label(), "MINIOS");
}

TEST(Mount, OneMebibyteIsFat12AndLargerIsFat16) {
  // 1 MiB holds ~2000 one-sector clusters, under the 4085 threshold.
  EXPECT_EQ(fatimg::plan_layout({}).type, FatType::Fat12);
  fatimg::ImageOptions big;
  big.size_bytes = 4 * 1024 * 1024;
  const auto lay = fatimg::plan_layout(big);
  EXPECT_EQ(lay.type, FatType::Fat16);
  EXPECT_GE(lay.cluster_count, kFat12Threshold);
}

TEST(Mount, ThresholdRule) {
  fatimg::ImageOptions o;
  o.size_bytes = 2 * 1024 * 1024;
  o.sectors_per_cluster = 2;
  auto lay = fatimg::plan_layout(o);
  EXPECT_LT(lay.cluster_count, kFat12Threshold);
  EXPECT_GT(lay.cluster_count, 2000u);
  EXPECT_EQ(lay.type, FatType::Fat12);
  fatimg::ImageBuilder b(o);
  periph::BlockDevice dev(b.build());
  EXPECT_EQ(FatVolume::mount(dev).type(), FatType::Fat12);
}

TEST(Mount, ZeroedBootSectorFails) {
  auto img = standard_image();
  std::fill(img.begin(), img.begin() + 512, 0);
  periph::BlockDevice dev(img);
  try {
    FatVolume::mount(dev);
    FAIL();
  } catch (const FsError& e) {
    EXPECT_EQ(e.code(), FsErrc::BadVolume);
  }
}

TEST(Readdir, RootListing) {
  auto img = standard_image();
  periph::BlockDevice dev(img);
  auto vol = FatVolume::mount(dev);
  EXPECT_EQ(names(vol.readdir("")), (std::vector<std::string>{"HELLO.APP", "README.TXT"}));
  EXPECT_EQ(names(vol.readdir("/")), names(vol.readdir("")));
  auto ref = reffat::open(img);
  EXPECT_EQ(ref->tree.at("").children, (std::vector<std::string>{"HELLO.APP", "README.TXT"}));
}

TEST(Readdir, EmptySubdirAndErrors) {
  fatimg::ImageBuilder b;
  b.add_dir("EMPTY");
  b.add_file("F.TXT", std::string_view("x"));
  periph::BlockDevice dev(b.build());
  auto vol = FatVolume::mount(dev);
  EXPECT_TRUE(vol.readdir("EMPTY").empty());
  try {
    vol.readdir("NOPE");
    FAIL();
  } catch (const FsError& e) {
    EXPECT_EQ(e.code(), FsErrc::NotFound);
  }
  try {
    vol.readdir("F.TXT");
    FAIL();
  } catch (const FsError& e) {
    EXPECT_EQ(e.code(), FsErrc::NotADirectory);
  }
}

TEST(Read, ContentAndBounds) {
  auto img = standard_image();
  periph::BlockDevice dev(img);
  auto vol = FatVolume::mount(dev);
  EXPECT_EQ(vol.read("README.TXT", 0, 6), bytes_of("minios"));
  EXPECT_EQ(vol.read("readme.txt", 2, 100), bytes_of("nios"));
  EXPECT_TRUE(vol.read("README.TXT", 6, 10).empty());
  EXPECT_TRUE(vol.read("README.TXT", 60, 10).empty());
  EXPECT_EQ(vol.read_all("HELLO.APP"), std::vector<std::uint8_t>(300, 0xAB));
}

TEST(Cd, RelativeAndParent) {
  fatimg::ImageBuilder b;
  b.add_file("A/B/C.TXT", std::string_view("deep"));
  b.add_file("A/X.TXT", std::string_view("x"));
  periph::BlockDevice dev(b.build());
  auto vol = FatVolume::mount(dev);
  vol.cd("A");
  EXPECT_EQ(vol.cwd(), "/A");
  EXPECT_EQ(names(vol.readdir("")), (std::vector<std::string>{"B", "X.TXT"}));
  vol.cd("b");
  EXPECT_EQ(vol.cwd(), "/A/B");
  EXPECT_EQ(vol.read_all("C.TXT"), bytes_of("deep"));
  vol.cd("..");
  EXPECT_EQ(vol.cwd(), "/A");
  vol.cd("../..");
  EXPECT_EQ(vol.cwd(), "/");
  EXPECT_EQ(vol.read_all("/A/B/C.TXT"), bytes_of("deep"));
  EXPECT_THROW(vol.cd("A/X.TXT"), FsError);
}

TEST(Corruption, SelfLoopIsDetected) {
  fatimg::ImageBuilder b;
  b.add_file("BIG.BIN", std::vector<std::uint8_t>(5000, 7));
  auto img = b.build();
  const std::uint32_t first = b.clusters().at("BIG.BIN");
  patch_fat(img, first, first);
  periph::BlockDevice dev(img);
  auto vol = FatVolume::mount(dev);
  try {
    vol.read_all("BIG.BIN");
    FAIL();
  } catch (const FsError& e) {
    EXPECT_EQ(e.code(), FsErrc::Corrupt);
  }
}

TEST(Corruption, OutOfRangeAndEarlyEnd) {
  fatimg::ImageBuilder b;
  b.add_file("BIG.BIN", std::vector<std::uint8_t>(5000, 7));
  auto img = b.build();
  const std::uint32_t first = b.clusters().at("BIG.BIN");
  auto bad = img;
  patch_fat(bad, first, 0xF00);
  periph::BlockDevice dev(bad);
  EXPECT_THROW(FatVolume::mount(dev).read_all("BIG.BIN"), FsError);
  auto early = img;
  patch_fat(early, first, 0xFFF);
  periph::BlockDevice dev2(early);
  EXPECT_THROW(FatVolume::mount(dev2).read_all("BIG.BIN"), FsError);
}

TEST(Read, BoundedChainWork) {
  fatimg::ImageOptions o;
  o.fragment = true;
  fatimg::ImageBuilder b(o);
  b.add_file("BIG.BIN", std::vector<std::uint8_t>(9000, 1));
  periph::BlockDevice dev(b.build());
  auto vol = FatVolume::mount(dev);
  vol.read_all("BIG.BIN");
  const auto cb = vol.geometry().cluster_bytes();
  EXPECT_LE(vol.last_chain_steps(), (9000 + cb - 1) / cb + 2);
}

TEST(Builder, Errors) {
  fatimg::ImageBuilder b;
  EXPECT_THROW(b.add_file("waytoolongname.txt", std::string_view("")), fatimg::BuildError);
  fatimg::ImageOptions tiny;
  tiny.size_bytes = 16 * 1024;
  EXPECT_THROW(fatimg::ImageBuilder(tiny).build(), fatimg::BuildError);
  EXPECT_EQ(fatimg::parse_size("1M"), 1024u * 1024);
  EXPECT_EQ(fatimg::parse_size("64k"), 64u * 1024);
  EXPECT_THROW(fatimg::parse_size("12Q"), fatimg::BuildError);
}

// Random trees compared against the reference reader.
TEST(Oracle, RandomImagesMatchReference) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    fatimg::ImageOptions o;
    o.size_bytes = (trial % 2 ? 4u : 1u) * 1024 * 1024;
    o.fragment = trial % 3 == 0;
    if (trial % 4 == 1) o.sectors_per_cluster = 4;
    fatimg::ImageBuilder b(o);
    std::vector<std::string> dirs{""};
    const int files = 5 + static_cast<int>(rng() % 20);
    for (int i = 0; i < files; ++i) {
      std::string dir = dirs[rng() % dirs.size()];
      if (rng() % 4 == 0) {
        std::string sub = (dir.empty() ? "" : dir + "/") + "D" + std::to_string(i);
        b.add_dir(sub);
        dirs.push_back(sub);
        continue;
      }
      const std::size_t size = rng() % 4 == 0 ? 0 : rng() % 6000;
      std::vector<std::uint8_t> data(size);
      for (auto& c : data) c = static_cast<std::uint8_t>(rng());
      b.add_file((dir.empty() ? "" : dir + "/") + "F" + std::to_string(i) + ".BIN", data);
    }
    auto img = b.build();
    auto ref = reffat::open(img);
    ASSERT_TRUE(ref);
    ASSERT_TRUE(ref->error.empty()) << ref->error;
    periph::BlockDevice dev(img);
    auto vol = FatVolume::mount(dev);
    for (const auto& [path, node] : ref->tree) {
      if (node.dir) {
        EXPECT_EQ(names(vol.readdir("/" + path)), node.children) << path;
      } else {
        EXPECT_EQ(vol.read_all("/" + path), node.data) << path;
      }
    }
  }
}
