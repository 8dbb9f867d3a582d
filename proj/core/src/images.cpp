#include <algorithm>
#include <cctype>

#include "minios/fatimg.hpp"
#include "minios/samples.hpp"

namespace minios::samples {

std::vector<std::string_view> apps() {
  auto all = names();
  std::erase(all, std::string_view("minilib"));
  return all;
}

std::string file_name(std::string_view app) {
  std::string out(app);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out + ".APP";
}

gasm::AppBinary build(std::string_view app) {
  return gasm::build_app(gasm::AsmSource::from_text(source(app), std::string(app) + ".gs"));
}

std::vector<std::uint8_t> test_image() {
  fatimg::ImageBuilder b;
  b.add_file("HELLO.APP", build("hello").serialize());
  b.add_file("README.TXT", kReadme);
  return b.build();
}

std::vector<std::uint8_t> standard_image() {
  fatimg::ImageBuilder b;
  for (auto app : apps()) b.add_file(file_name(app), build(app).serialize());
  b.add_file("README.TXT", kReadme);
  return b.build();
}

}  // namespace minios::samples
