#pragma once

// Guest toolchain: two-pass assembler for the vmcu ISA, the .app flat
// binary format, a disassembler, and the minilib syscall prelude.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "minios/abi.hpp"
#include "minios/memprot.hpp"
#include "minios/vmcu.hpp"

namespace minios::gasm {

struct SourceLine {
  std::string text;
  std::string file;
  int line = 0;
};

struct AsmSource {
  std::vector<SourceLine> lines;

  static AsmSource from_text(std::string_view text, const std::string& file = "<input>");
  void append(const AsmSource& other);
  std::string text() const;
};

/// Assembly error carrying its origin; what() is "file:line: message".
class AsmError : public std::runtime_error {
 public:
  AsmError(std::string file, int line, const std::string& message);
  const std::string& file() const { return file_; }
  int line() const { return line_; }
  const std::string& message() const { return message_; }

 private:
  std::string file_;
  int line_;
  std::string message_;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kMagic = "MOSA";
inline constexpr std::size_t kHeaderSize = 32;
inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::uint32_t kDefaultStackWords = 256;

struct AppHeader {
  std::uint16_t version = kFormatVersion;
  std::uint16_t flags = 0;
  std::uint32_t entry = 0;
  std::uint32_t code_size = 0;
  std::uint32_t data_size = 0;
  std::uint32_t bss_size = 0;
  std::uint32_t min_stack = kDefaultStackWords;  // words
  std::uint32_t crc = 0;  // crc32(code + data), present when flags == 0

  bool operator==(const AppHeader&) const = default;
};

struct AppBinary {
  AppHeader header;
  std::vector<std::uint8_t> code;
  std::vector<std::uint8_t> data;

  /// Fills code_size/data_size/crc from the payload.
  void finalize();
  std::vector<std::uint8_t> serialize() const;
  /// Validates magic, version, sizes, entry and crc; throws FormatError.
  static AppBinary parse(std::span<const std::uint8_t> bytes);

  std::uint32_t image_size() const {
    return header.code_size + header.data_size + header.bss_size;
  }
  memprot::AppLayout layout(std::uint32_t base) const {
    return {base, header.code_size, header.data_size, header.bss_size};
  }

  bool operator==(const AppBinary&) const = default;
};

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

struct Assembly {
  AppBinary binary;
  std::map<std::string, std::uint32_t> symbols;  // absolute, for load_base
};

/// Two passes: pass 1 sizes statements and binds labels relative to
/// load_base; pass 2 encodes. Throws AsmError with the offending line.
Assembly assemble_with_symbols(const AsmSource& src, std::uint32_t load_base);
AppBinary assemble(const AsmSource& src, std::uint32_t load_base = vmcu::kRamBase);

/// Inverse of assemble() up to label names (synthesized as L_<offset>).
/// Words that are not canonical instruction encodings come out as .word.
AsmSource disassemble(const AppBinary& bin);

std::span<const abi::SyscallEntry> minilib_symbols();
std::optional<std::uint8_t> minilib_lookup(std::string_view name);

/// Start-up stub, one SVC wrapper per syscall, and helper routines.
AsmSource minilib_prelude();

/// Prelude + user program, assembled for the given base.
AppBinary build_app(const AsmSource& user, std::uint32_t load_base = vmcu::kRamBase);

}  // namespace minios::gasm
