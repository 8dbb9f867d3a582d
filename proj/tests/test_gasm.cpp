#include <gtest/gtest.h>

#include <random>
#include <zlib.h>

#include "minios/gasm.hpp"
#include "minios/samples.hpp"

using namespace minios;
using namespace minios::gasm;

namespace {

AppBinary asm_text(std::string_view text) { return assemble(AsmSource::from_text(text)); }

std::string asm_error(std::string_view text) {
  try {
    asm_text(text);
  } catch (const AsmError& e) {
    return e.what();
  }
  return "no error";
}

std::uint32_t word(const std::vector<std::uint8_t>& b, std::size_t off) {
  return std::uint32_t{b[off]} | std::uint32_t{b[off + 1]} << 8 | std::uint32_t{b[off + 2]} << 16 |
         std::uint32_t{b[off + 3]} << 24;
}

}  // namespace

TEST(Assemble, MoviHalt) {
  auto bin = asm_text("MOVI r0, 5\nHALT\n");
  const std::vector<std::uint8_t> expect{0x05, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0xFF};
  EXPECT_EQ(bin.code, expect);
  EXPECT_EQ(bin.header.code_size, 8u);
  EXPECT_EQ(bin.header.entry, 0u);
}

TEST(Assemble, SelfBranch) {
  auto bin = asm_text("loop: B loop\n");
  ASSERT_EQ(bin.code.size(), 4u);
  EXPECT_EQ(word(bin.code, 0), 0x2100'FFFFu);
}

TEST(Assemble, DuplicateLabelReportsSecondLine) {
  EXPECT_EQ(asm_error("x: MOVI r0, 1\nx: HALT\n"), "<input>:2: duplicate label x");
}

TEST(Assemble, UndefinedLabel) {
  EXPECT_EQ(asm_error("  B nowhere\n"), "<input>:1: undefined label nowhere");
}

TEST(Assemble, ImmediateOutOfRange) {
  EXPECT_EQ(asm_error("MOVI r0, 70000\n"), "<input>:1: immediate out of range");
  EXPECT_EQ(asm_error("SVC #256\n"), "<input>:1: immediate out of range");
}

TEST(Assemble, OtherErrors) {
  EXPECT_EQ(asm_error("FROB r0\n"), "<input>:1: unknown instruction FROB");
  EXPECT_EQ(asm_error("MOVI r16, 1\n"), "<input>:1: bad register 'r16'");
  EXPECT_EQ(asm_error(".bogus 1\n"), "<input>:1: malformed directive .bogus");
  EXPECT_EQ(asm_error(".data\nMOVI r0, 1\n"), "<input>:2: instruction outside .text");
  EXPECT_EQ(asm_error("; nothing\n"), "<input>:0: empty program");
  EXPECT_EQ(asm_error(".equ a b\n.equ b a\nMOVI r0, a\n").find("recursive .equ a"), 11u);
}

TEST(Assemble, EntryPrefersStartThenMain) {
  EXPECT_EQ(asm_text("HALT\nmain: HALT\n").header.entry, 4u);
  EXPECT_EQ(asm_text("HALT\nmain: HALT\n_start: HALT\n").header.entry, 8u);
}

TEST(Assemble, DataBssStackLayout) {
  auto res = assemble_with_symbols(AsmSource::from_text(R"(
      .stack 64
  main:
      LA r0, msg
      HALT
      .data
  msg: .asciz "hi"
  tbl: .word 1, main
  buf: .bss 10
  )"),
                                   0x2000'0000);
  const auto& bin = res.binary;
  EXPECT_EQ(bin.header.min_stack, 64u);
  EXPECT_EQ(bin.header.code_size, 12u);  // LA is two words
  EXPECT_EQ(bin.header.data_size, 12u);
  EXPECT_EQ(bin.header.bss_size, 12u);
  EXPECT_EQ(res.symbols.at("msg"), 0x2000'000Cu);
  EXPECT_EQ(res.symbols.at("tbl"), 0x2000'0010u);
  EXPECT_EQ(res.symbols.at("buf"), 0x2000'0018u);
  EXPECT_EQ(word(bin.data, 4), 1u);
  EXPECT_EQ(word(bin.data, 8), 0x2000'0000u);
  // LA: MOVI r12, offset; ADD r0, r9, r12
  EXPECT_EQ(word(bin.code, 0), 0x01C0'000Cu);
  EXPECT_EQ(word(bin.code, 4), 0x0309'C000u);
}

TEST(Assemble, LiSmallAndWideForms) {
  EXPECT_EQ(asm_text("LI r1, 7\nHALT\n").header.code_size, 8u);
  auto wide = asm_text("LI r1, 0x12345678\nHALT\n");
  EXPECT_EQ(wide.header.code_size, 24u);
  // Forward reference is sized wide in pass 1.
  EXPECT_EQ(asm_text("LI r1, k\nHALT\n.equ k 3\n").header.code_size, 24u);
}

TEST(Assemble, CharLiteralsAndEscapes) {
  auto bin = asm_text("MOVI r0, '\\n'\nMOVI r1, 'A'+1\nHALT\n.data\n.ascii \"a\\x41;\"\n");
  EXPECT_EQ(word(bin.code, 0) & 0xFFFF, 10u);
  EXPECT_EQ(word(bin.code, 4) & 0xFFFF, 66u);
  EXPECT_EQ(bin.data[0], 'a');
  EXPECT_EQ(bin.data[1], 'A');
  EXPECT_EQ(bin.data[2], ';');
}

TEST(Format, SerializeParseRoundTrip) {
  auto bin = asm_text("main: MOVI r0, 1\nHALT\n.data\n.word 5\n.bss 8\n");
  auto bytes = bin.serialize();
  ASSERT_EQ(bytes.size(), kHeaderSize + 12);
  EXPECT_TRUE(std::equal(kMagic.begin(), kMagic.end(), bytes.begin()));
  EXPECT_EQ(AppBinary::parse(bytes), bin);
}

TEST(Format, CrcMatchesZlib) {
  const std::string s = "123456789";
  const std::vector<std::uint8_t> v(s.begin(), s.end());
  EXPECT_EQ(crc32(v), 0xCBF43926u);
  EXPECT_EQ(crc32(v), ::crc32(0, v.data(), static_cast<uInt>(v.size())));
}

TEST(Format, ParseRejectsCorruption) {
  auto bytes = asm_text("MOVI r0, 1\nHALT\n").serialize();
  auto expect_error = [](std::vector<std::uint8_t> b, const std::string& what) {
    try {
      AppBinary::parse(b);
      ADD_FAILURE() << "accepted " << what;
    } catch (const FormatError& e) {
      EXPECT_EQ(std::string(e.what()), what);
    }
  };
  expect_error({bytes.begin(), bytes.begin() + 10}, "truncated header");
  auto magic = bytes;
  magic[0] = 'X';
  expect_error(magic, "bad magic");
  auto flipped = bytes;
  flipped.back() ^= 1;
  expect_error(flipped, "crc mismatch");
  auto cut = bytes;
  cut.pop_back();
  expect_error(cut, "truncated payload");
}

TEST(Disassemble, RoundTripsSamples) {
  for (const auto& name : samples::names()) {
    if (name == "minilib") continue;
    SCOPED_TRACE(std::string(name));
    auto bin = build_app(AsmSource::from_text(samples::source(name), std::string(name)));
    auto again = assemble(disassemble(bin));
    EXPECT_EQ(again, bin);
  }
}

TEST(Disassemble, RoundTripsRandomWords) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    AppBinary bin;
    const int n = 1 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) {
      std::uint32_t w = static_cast<std::uint32_t>(rng());
      if (rng() % 2) {
        const auto table = vmcu::opcode_table();
        w = (w & 0x00FF'FFFF) | std::uint32_t{static_cast<std::uint8_t>(table[rng() % table.size()].op)} << 24;
      }
      for (int b = 0; b < 4; ++b) bin.code.push_back(static_cast<std::uint8_t>(w >> (8 * b)));
    }
    for (int i = 0, d = static_cast<int>(rng() % 3) * 4; i < d; ++i)
      bin.data.push_back(static_cast<std::uint8_t>(rng()));
    bin.header.entry = static_cast<std::uint32_t>(rng() % n) * 4;
    bin.header.bss_size = static_cast<std::uint32_t>(rng() % 3) * 4;
    bin.finalize();
    auto again = assemble(disassemble(bin));
    ASSERT_EQ(again, bin) << disassemble(bin).text();
  }
}

TEST(Minilib, SymbolsMatchAbi) {
  EXPECT_EQ(minilib_lookup("usb_write"), 1);
  EXPECT_EQ(minilib_lookup("execv"), 30);
  EXPECT_FALSE(minilib_lookup("nope"));
  EXPECT_EQ(minilib_symbols().size(), minios::abi::kSyscalls.size());
}

TEST(Minilib, WrapperIsSvcThenReturn) {
  auto src = minilib_prelude();
  src.append(AsmSource::from_text("main: RET\n"));
  auto res = assemble_with_symbols(src, vmcu::kRamBase);
  const auto off = res.symbols.at("usb_write") - vmcu::kRamBase;
  EXPECT_EQ(word(res.binary.code, off), 0x4000'0001u);
  EXPECT_EQ(word(res.binary.code, off + 4), 0x270E'0000u);  // BX lr
}
