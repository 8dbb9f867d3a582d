#pragma once

// Virtual microcontroller core: a small 32-bit load/store ISA with
// kernel/user privilege, banked stacks, SVC traps, and MPU-checked access.
//
// Encoding (one 32-bit word per instruction):
//   [31:24] opcode  [23:20] rd  [19:16] rs1  [15:12] rs2  [15:0] imm16
// Memory instructions take a signed 12-bit offset in [11:0] because rs2
// occupies [15:12]. Branch offsets are signed words relative to pc+4.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "minios/memprot.hpp"
#include "minios/types.hpp"

namespace minios::vmcu {

inline constexpr std::uint32_t kRamBase = 0x2000'0000;
inline constexpr std::uint32_t kDefaultRamSize = 256 * 1024;
inline constexpr std::uint32_t kKernelPageSize = 4096;
inline constexpr std::uint32_t kMmioBase = 0x4000'0000;
inline constexpr std::uint32_t kMmioSize = 0x1000;

/// Branching here (BX lr from a thread entry or event handler) traps back
/// into the kernel with svc number kSentinelTrap.
inline constexpr std::uint32_t kReturnSentinel = 0xFFFF'FFFC;
inline constexpr std::uint32_t kSentinelTrap = 0x100;

enum class FaultKind : std::uint8_t {
  DivByZero,
  SegFault,
  BadOpcode,
  UnalignedAccess,
  StackOverflow,
};

std::string_view to_string(FaultKind k);
std::optional<FaultKind> fault_kind_from_string(std::string_view s);

struct FaultCause {
  FaultKind kind = FaultKind::BadOpcode;
  std::uint32_t addr = 0;
  std::uint32_t pc = 0;
  bool operator==(const FaultCause&) const = default;
};

namespace flag {
inline constexpr std::uint8_t N = 8;
inline constexpr std::uint8_t Z = 4;
inline constexpr std::uint8_t C = 2;
inline constexpr std::uint8_t V = 1;
}  // namespace flag

struct GuestCpu {
  static constexpr std::size_t kSp = 13;
  static constexpr std::size_t kLr = 14;
  static constexpr std::size_t kPc = 15;

  std::array<std::uint32_t, 16> regs{};
  Mode mode = Mode::Kernel;
  std::uint32_t psp = 0;  // banked user sp while in Kernel mode
  std::uint32_t msp = 0;  // banked kernel sp while in User mode
  std::uint32_t psp_limit = 0;  // 0 disables the user stack-limit check
  std::uint8_t flags = 0;
  std::optional<FaultCause> fault;
  std::uint64_t instret = 0;

  std::uint32_t& sp() { return regs[kSp]; }
  std::uint32_t& lr() { return regs[kLr]; }
  std::uint32_t& pc() { return regs[kPc]; }
  std::uint32_t pc() const { return regs[kPc]; }

  /// Sets up a fresh user-mode context; the active sp is the user stack.
  static GuestCpu user_context(std::uint32_t entry, std::uint32_t sp,
                               std::uint32_t msp);

  bool operator==(const GuestCpu&) const = default;
};

/// SVC entry: switch to Kernel mode and bank the stack pointer.
void enter_kernel(GuestCpu& cpu);
/// Exception return: back to User mode with the user stack active.
void return_to_user(GuestCpu& cpu);

struct MemoryMap {
  std::uint32_t ram_base = kRamBase;
  std::uint32_t ram_size = kDefaultRamSize;
  std::uint32_t mmio_base = kMmioBase;

  std::uint32_t kpage_base() const { return ram_base + ram_size - kKernelPageSize; }
  bool in_ram(std::uint32_t addr, std::uint32_t len) const {
    return addr >= ram_base && len <= ram_size && addr - ram_base <= ram_size - len;
  }
  bool in_mmio(std::uint32_t addr, std::uint32_t len) const {
    return addr >= mmio_base && len <= kMmioSize && addr - mmio_base <= kMmioSize - len;
  }
};

/// Guest physical memory: RAM plus a small MMIO scratch window. No devices
/// are wired to MMIO; the kernel drives peripherals natively.
class Memory {
 public:
  explicit Memory(std::uint32_t ram_size = kDefaultRamSize);

  const MemoryMap& map() const { return map_; }
  bool mapped(std::uint32_t addr, std::uint32_t len) const {
    return map_.in_ram(addr, len) || map_.in_mmio(addr, len);
  }

  // Unchecked accessors; callers verify mapped() first.
  std::uint8_t load8(std::uint32_t addr) const;
  std::uint32_t load32(std::uint32_t addr) const;
  void store8(std::uint32_t addr, std::uint8_t v);
  void store32(std::uint32_t addr, std::uint32_t v);

  /// Bulk copies restricted to RAM. Return false if out of range.
  bool read(std::uint32_t addr, std::span<std::uint8_t> out) const;
  bool write(std::uint32_t addr, std::span<const std::uint8_t> in);
  bool fill(std::uint32_t addr, std::uint32_t len, std::uint8_t value);

  std::span<const std::uint8_t> ram() const { return ram_; }
  std::span<std::uint8_t> ram() { return ram_; }

  bool operator==(const Memory& o) const { return ram_ == o.ram_ && mmio_ == o.mmio_; }

 private:
  std::uint8_t* host(std::uint32_t addr);
  const std::uint8_t* host(std::uint32_t addr) const;

  MemoryMap map_;
  std::vector<std::uint8_t> ram_;
  std::array<std::uint8_t, kMmioSize> mmio_{};
};

enum class Opcode : std::uint8_t {
  Movi = 0x01,
  Mov = 0x02,
  Add = 0x03,
  Sub = 0x04,
  Mul = 0x05,
  Divu = 0x06,
  And = 0x07,
  Or = 0x08,
  Xor = 0x09,
  Shl = 0x0A,
  Shr = 0x0B,
  Ldr = 0x10,
  Str = 0x11,
  Ldrb = 0x12,
  Strb = 0x13,
  Cmp = 0x20,
  B = 0x21,
  Beq = 0x22,
  Bne = 0x23,
  Blt = 0x24,
  Bge = 0x25,
  Bl = 0x26,
  Bx = 0x27,
  Push = 0x30,
  Pop = 0x31,
  Svc = 0x40,
  Halt = 0xFF,
};

enum class Format : std::uint8_t {
  RdImm,     // MOVI rd, imm16
  RdRs,      // MOV rd, rs1
  RdRsRs,    // ADD rd, rs1, rs2
  Mem,       // LDR rd, [rs1+off] / STR rs2, [rs1+off]
  RsRs,      // CMP rs1, rs2
  Branch,    // B/BEQ/.../BL off
  Rs,        // BX rs1 / PUSH rs1
  Rd,        // POP rd
  Imm8,      // SVC imm8
  None,      // HALT
};

struct OpInfo {
  Opcode op;
  std::string_view mnemonic;
  Format format;
};

std::span<const OpInfo> opcode_table();
std::optional<OpInfo> op_info(std::uint8_t opcode);
std::optional<OpInfo> op_info(std::string_view mnemonic);  // case-insensitive

/// Raw field view of an instruction word. The fields are stored verbatim,
/// so encode(decode(w)) == w for every word with a known opcode.
struct Instruction {
  Opcode op = Opcode::Halt;
  std::uint8_t rd = 0;
  std::uint8_t rs1 = 0;
  std::uint16_t imm = 0;

  std::uint8_t rs2() const { return static_cast<std::uint8_t>(imm >> 12); }
  std::int32_t branch_offset() const { return static_cast<std::int16_t>(imm); }
  std::int32_t mem_offset() const {
    std::int32_t v = imm & 0x0FFF;
    return v >= 0x800 ? v - 0x1000 : v;
  }
  std::uint8_t svc_number() const { return static_cast<std::uint8_t>(imm & 0xFF); }

  bool operator==(const Instruction&) const = default;
};

std::optional<Instruction> decode(std::uint32_t word);
std::uint32_t encode(const Instruction& ins);

// Builders producing canonical encodings.
Instruction make_rd_imm(Opcode op, std::uint8_t rd, std::uint16_t imm);
Instruction make_rrr(Opcode op, std::uint8_t rd, std::uint8_t rs1, std::uint8_t rs2);
Instruction make_mem(Opcode op, std::uint8_t reg, std::uint8_t base, std::int32_t offset);
Instruction make_branch(Opcode op, std::int32_t word_offset);
Instruction make_svc(std::uint8_t n);

/// Human-readable form, e.g. "ADD r1, r2, r3". Branches print their offset.
std::string to_string(const Instruction& ins);

struct StepResult {
  enum class Kind : std::uint8_t { Retired, Trap, Fault, Halted };

  Kind kind = Kind::Retired;
  std::uint32_t svc = 0;
  FaultCause fault{};

  static StepResult retired() { return {}; }
  static StepResult trap(std::uint32_t n) { return {Kind::Trap, n, {}}; }
  static StepResult faulted(FaultCause c) { return {Kind::Fault, 0, c}; }
  static StepResult halted() { return {Kind::Halted, 0, {}}; }

  bool operator==(const StepResult&) const = default;
};

/// Executes exactly one instruction. Requires cpu.fault to be empty.
StepResult step(GuestCpu& cpu, Memory& mem, const memprot::MpuConfig& mpu);

/// Steps until the budget is spent or a non-Retired result occurs. The
/// count includes a trapping instruction but not a faulting one.
std::pair<StepResult, std::uint64_t> run_budget(GuestCpu& cpu, Memory& mem,
                                                const memprot::MpuConfig& mpu,
                                                std::uint64_t budget);

}  // namespace minios::vmcu
