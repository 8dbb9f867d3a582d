#pragma once

// Guest assembly sources compiled into the library: the minilib helper
// routines and the shipped sample applications (core/guest/*.gs).

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "minios/gasm.hpp"

namespace minios::samples {

/// Throws std::out_of_range for an unknown name.
std::string_view source(std::string_view name);
std::vector<std::string_view> names();

/// Sample applications (every source but minilib).
std::vector<std::string_view> apps();
/// "hello" -> "HELLO.APP"
std::string file_name(std::string_view app);
gasm::AppBinary build(std::string_view app);

inline constexpr std::string_view kReadme = "minios";

/// HELLO.APP and README.TXT only.
std::vector<std::uint8_t> test_image();
/// Every sample app plus README.TXT.
std::vector<std::uint8_t> standard_image();

}  // namespace minios::samples
