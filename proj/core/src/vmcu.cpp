#include "minios/vmcu.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <cstring>
#include <sstream>

namespace minios::vmcu {

namespace {

constexpr std::array<OpInfo, 27> kOps{{
    {Opcode::Movi, "MOVI", Format::RdImm},
    {Opcode::Mov, "MOV", Format::RdRs},
    {Opcode::Add, "ADD", Format::RdRsRs},
    {Opcode::Sub, "SUB", Format::RdRsRs},
    {Opcode::Mul, "MUL", Format::RdRsRs},
    {Opcode::Divu, "DIVU", Format::RdRsRs},
    {Opcode::And, "AND", Format::RdRsRs},
    {Opcode::Or, "OR", Format::RdRsRs},
    {Opcode::Xor, "XOR", Format::RdRsRs},
    {Opcode::Shl, "SHL", Format::RdRsRs},
    {Opcode::Shr, "SHR", Format::RdRsRs},
    {Opcode::Ldr, "LDR", Format::Mem},
    {Opcode::Str, "STR", Format::Mem},
    {Opcode::Ldrb, "LDRB", Format::Mem},
    {Opcode::Strb, "STRB", Format::Mem},
    {Opcode::Cmp, "CMP", Format::RsRs},
    {Opcode::B, "B", Format::Branch},
    {Opcode::Beq, "BEQ", Format::Branch},
    {Opcode::Bne, "BNE", Format::Branch},
    {Opcode::Blt, "BLT", Format::Branch},
    {Opcode::Bge, "BGE", Format::Branch},
    {Opcode::Bl, "BL", Format::Branch},
    {Opcode::Bx, "BX", Format::Rs},
    {Opcode::Push, "PUSH", Format::Rs},
    {Opcode::Pop, "POP", Format::Rd},
    {Opcode::Svc, "SVC", Format::Imm8},
    {Opcode::Halt, "HALT", Format::None},
}};

constexpr std::array<std::optional<OpInfo>, 256> build_index() {
  std::array<std::optional<OpInfo>, 256> idx{};
  for (const auto& o : kOps) idx[static_cast<std::uint8_t>(o.op)] = o;
  return idx;
}

constexpr auto kIndex = build_index();

bool is_store(Opcode op) { return op == Opcode::Str || op == Opcode::Strb; }

}  // namespace

std::string_view to_string(FaultKind k) {
  switch (k) {
    case FaultKind::DivByZero: return "DivByZero";
    case FaultKind::SegFault: return "SegFault";
    case FaultKind::BadOpcode: return "BadOpcode";
    case FaultKind::UnalignedAccess: return "UnalignedAccess";
    case FaultKind::StackOverflow: return "StackOverflow";
  }
  return "?";
}

std::optional<FaultKind> fault_kind_from_string(std::string_view s) {
  for (auto k : {FaultKind::DivByZero, FaultKind::SegFault, FaultKind::BadOpcode,
                 FaultKind::UnalignedAccess, FaultKind::StackOverflow}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

GuestCpu GuestCpu::user_context(std::uint32_t entry, std::uint32_t sp, std::uint32_t msp) {
  GuestCpu cpu;
  cpu.mode = Mode::User;
  cpu.regs[kPc] = entry;
  cpu.regs[kSp] = sp;
  cpu.regs[kLr] = kReturnSentinel;
  cpu.msp = msp;
  return cpu;
}

void enter_kernel(GuestCpu& cpu) {
  if (cpu.mode == Mode::Kernel) return;
  cpu.psp = cpu.regs[GuestCpu::kSp];
  cpu.regs[GuestCpu::kSp] = cpu.msp;
  cpu.mode = Mode::Kernel;
}

void return_to_user(GuestCpu& cpu) {
  if (cpu.mode == Mode::User) return;
  cpu.msp = cpu.regs[GuestCpu::kSp];
  cpu.regs[GuestCpu::kSp] = cpu.psp;
  cpu.mode = Mode::User;
}

// ---------------------------------------------------------------- memory

Memory::Memory(std::uint32_t ram_size) : ram_(ram_size, 0) { map_.ram_size = ram_size; }

std::uint8_t* Memory::host(std::uint32_t addr) {
  if (addr >= map_.mmio_base) return mmio_.data() + (addr - map_.mmio_base);
  return ram_.data() + (addr - map_.ram_base);
}

const std::uint8_t* Memory::host(std::uint32_t addr) const {
  if (addr >= map_.mmio_base) return mmio_.data() + (addr - map_.mmio_base);
  return ram_.data() + (addr - map_.ram_base);
}

std::uint8_t Memory::load8(std::uint32_t addr) const { return *host(addr); }

std::uint32_t Memory::load32(std::uint32_t addr) const {
  const std::uint8_t* p = host(addr);
  return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 |
         std::uint32_t{p[3]} << 24;
}

void Memory::store8(std::uint32_t addr, std::uint8_t v) { *host(addr) = v; }

void Memory::store32(std::uint32_t addr, std::uint32_t v) {
  std::uint8_t* p = host(addr);
  p[0] = static_cast<std::uint8_t>(v);
  p[1] = static_cast<std::uint8_t>(v >> 8);
  p[2] = static_cast<std::uint8_t>(v >> 16);
  p[3] = static_cast<std::uint8_t>(v >> 24);
}

bool Memory::read(std::uint32_t addr, std::span<std::uint8_t> out) const {
  if (!map_.in_ram(addr, static_cast<std::uint32_t>(out.size()))) return false;
  std::memcpy(out.data(), host(addr), out.size());
  return true;
}

bool Memory::write(std::uint32_t addr, std::span<const std::uint8_t> in) {
  if (!map_.in_ram(addr, static_cast<std::uint32_t>(in.size()))) return false;
  std::memcpy(host(addr), in.data(), in.size());
  return true;
}

bool Memory::fill(std::uint32_t addr, std::uint32_t len, std::uint8_t value) {
  if (!map_.in_ram(addr, len)) return false;
  std::memset(host(addr), value, len);
  return true;
}

// ------------------------------------------------------------- encoding

std::span<const OpInfo> opcode_table() { return kOps; }

std::optional<OpInfo> op_info(std::uint8_t opcode) { return kIndex[opcode]; }

std::optional<OpInfo> op_info(std::string_view mnemonic) {
  for (const auto& o : kOps) {
    if (std::ranges::equal(o.mnemonic, mnemonic, [](char a, char b) {
          return a == std::toupper(static_cast<unsigned char>(b));
        }))
      return o;
  }
  return std::nullopt;
}

std::optional<Instruction> decode(std::uint32_t word) {
  const auto opcode = static_cast<std::uint8_t>(word >> 24);
  if (!kIndex[opcode]) return std::nullopt;
  Instruction ins;
  ins.op = static_cast<Opcode>(opcode);
  ins.rd = static_cast<std::uint8_t>((word >> 20) & 0xF);
  ins.rs1 = static_cast<std::uint8_t>((word >> 16) & 0xF);
  ins.imm = static_cast<std::uint16_t>(word & 0xFFFF);
  return ins;
}

std::uint32_t encode(const Instruction& ins) {
  return std::uint32_t{static_cast<std::uint8_t>(ins.op)} << 24 |
         std::uint32_t{ins.rd & 0xFu} << 20 | std::uint32_t{ins.rs1 & 0xFu} << 16 | ins.imm;
}

Instruction make_rd_imm(Opcode op, std::uint8_t rd, std::uint16_t imm) {
  return {op, rd, 0, imm};
}

Instruction make_rrr(Opcode op, std::uint8_t rd, std::uint8_t rs1, std::uint8_t rs2) {
  return {op, rd, rs1, static_cast<std::uint16_t>((rs2 & 0xF) << 12)};
}

Instruction make_mem(Opcode op, std::uint8_t reg, std::uint8_t base, std::int32_t offset) {
  const auto off = static_cast<std::uint16_t>(offset & 0x0FFF);
  if (is_store(op)) return {op, 0, base, static_cast<std::uint16_t>((reg & 0xF) << 12 | off)};
  return {op, reg, base, off};
}

Instruction make_branch(Opcode op, std::int32_t word_offset) {
  return {op, 0, 0, static_cast<std::uint16_t>(word_offset & 0xFFFF)};
}

Instruction make_svc(std::uint8_t n) { return {Opcode::Svc, 0, 0, n}; }

std::string to_string(const Instruction& ins) {
  const auto info = *op_info(static_cast<std::uint8_t>(ins.op));
  std::ostringstream os;
  os << info.mnemonic;
  auto r = [](unsigned n) { return "r" + std::to_string(n); };
  switch (info.format) {
    case Format::RdImm: os << ' ' << r(ins.rd) << ", " << ins.imm; break;
    case Format::RdRs: os << ' ' << r(ins.rd) << ", " << r(ins.rs1); break;
    case Format::RdRsRs:
      os << ' ' << r(ins.rd) << ", " << r(ins.rs1) << ", " << r(ins.rs2());
      break;
    case Format::Mem: {
      const unsigned reg = is_store(ins.op) ? ins.rs2() : ins.rd;
      os << ' ' << r(reg) << ", [" << r(ins.rs1);
      if (ins.mem_offset() != 0) os << (ins.mem_offset() < 0 ? "-" : "+") << std::abs(ins.mem_offset());
      os << ']';
      break;
    }
    case Format::RsRs: os << ' ' << r(ins.rs1) << ", " << r(ins.rs2()); break;
    case Format::Branch: os << ' ' << ins.branch_offset(); break;
    case Format::Rs: os << ' ' << r(ins.rs1); break;
    case Format::Rd: os << ' ' << r(ins.rd); break;
    case Format::Imm8: os << " #" << unsigned{ins.svc_number()}; break;
    case Format::None: break;
  }
  return os.str();
}

// ------------------------------------------------------------ execution

namespace {

std::uint8_t compare_flags(std::uint32_t a, std::uint32_t b) {
  const std::uint32_t res = a - b;
  std::uint8_t f = 0;
  if (res == 0) f |= flag::Z;
  if (res >> 31) f |= flag::N;
  if (a >= b) f |= flag::C;
  if (((a ^ b) & (a ^ res)) >> 31) f |= flag::V;
  return f;
}

bool taken(Opcode op, std::uint8_t f) {
  const bool z = f & flag::Z;
  const bool n = f & flag::N;
  const bool v = f & flag::V;
  switch (op) {
    case Opcode::B:
    case Opcode::Bl: return true;
    case Opcode::Beq: return z;
    case Opcode::Bne: return !z;
    case Opcode::Blt: return n != v;
    case Opcode::Bge: return n == v;
    default: return false;
  }
}

struct Exec {
  GuestCpu& cpu;
  Memory& mem;
  const memprot::MpuConfig& mpu;
  std::uint32_t pc;

  StepResult fault(FaultKind k, std::uint32_t addr) {
    FaultCause c{k, addr, pc};
    cpu.fault = c;
    return StepResult::faulted(c);
  }

  std::optional<StepResult> check_data(std::uint32_t addr, std::uint32_t size, Access a) {
    if (size == 4 && (addr & 3)) return fault(FaultKind::UnalignedAccess, addr);
    if (!mem.mapped(addr, size)) return fault(FaultKind::SegFault, addr);
    if (!memprot::check(mpu, cpu.mode, a, addr, size)) return fault(FaultKind::SegFault, addr);
    return std::nullopt;
  }

  StepResult retire(std::uint32_t next_pc) {
    cpu.regs[GuestCpu::kPc] = next_pc;
    ++cpu.instret;
    return StepResult::retired();
  }

  // Writes rd; a write to r15 is a jump and must stay word aligned.
  StepResult write_reg(std::uint8_t rd, std::uint32_t value) {
    if (rd == GuestCpu::kPc) {
      if (value & 3) return fault(FaultKind::UnalignedAccess, value);
      return retire(value);
    }
    cpu.regs[rd] = value;
    return retire(pc + 4);
  }
};

}  // namespace

StepResult step(GuestCpu& cpu, Memory& mem, const memprot::MpuConfig& mpu) {
  Exec ex{cpu, mem, mpu, cpu.regs[GuestCpu::kPc]};
  const std::uint32_t pc = ex.pc;

  if (pc == kReturnSentinel) {
    enter_kernel(cpu);
    ++cpu.instret;
    return StepResult::trap(kSentinelTrap);
  }
  if (pc & 3) return ex.fault(FaultKind::UnalignedAccess, pc);
  if (!mem.map().in_ram(pc, 4)) return ex.fault(FaultKind::SegFault, pc);
  if (!memprot::check(mpu, cpu.mode, Access::Execute, pc, 4))
    return ex.fault(FaultKind::SegFault, pc);

  const auto decoded = decode(mem.load32(pc));
  if (!decoded) return ex.fault(FaultKind::BadOpcode, pc);
  const Instruction& in = *decoded;
  auto& r = cpu.regs;
  const std::uint32_t a = r[in.rs1];
  const std::uint32_t b = r[in.rs2()];

  switch (in.op) {
    case Opcode::Movi: return ex.write_reg(in.rd, in.imm);
    case Opcode::Mov: return ex.write_reg(in.rd, a);
    case Opcode::Add: return ex.write_reg(in.rd, a + b);
    case Opcode::Sub: return ex.write_reg(in.rd, a - b);
    case Opcode::Mul: return ex.write_reg(in.rd, a * b);
    case Opcode::Divu:
      if (b == 0) return ex.fault(FaultKind::DivByZero, 0);
      return ex.write_reg(in.rd, a / b);
    case Opcode::And: return ex.write_reg(in.rd, a & b);
    case Opcode::Or: return ex.write_reg(in.rd, a | b);
    case Opcode::Xor: return ex.write_reg(in.rd, a ^ b);
    case Opcode::Shl: return ex.write_reg(in.rd, a << (b & 31));
    case Opcode::Shr: return ex.write_reg(in.rd, a >> (b & 31));

    case Opcode::Ldr:
    case Opcode::Ldrb: {
      const std::uint32_t size = in.op == Opcode::Ldr ? 4 : 1;
      const std::uint32_t addr = a + static_cast<std::uint32_t>(in.mem_offset());
      if (auto f = ex.check_data(addr, size, Access::Read)) return *f;
      return ex.write_reg(in.rd, size == 4 ? mem.load32(addr) : mem.load8(addr));
    }
    case Opcode::Str:
    case Opcode::Strb: {
      const std::uint32_t size = in.op == Opcode::Str ? 4 : 1;
      const std::uint32_t addr = a + static_cast<std::uint32_t>(in.mem_offset());
      if (auto f = ex.check_data(addr, size, Access::Write)) return *f;
      if (size == 4) mem.store32(addr, b);
      else mem.store8(addr, static_cast<std::uint8_t>(b));
      return ex.retire(pc + 4);
    }

    case Opcode::Cmp:
      cpu.flags = compare_flags(a, b);
      return ex.retire(pc + 4);

    case Opcode::B:
    case Opcode::Beq:
    case Opcode::Bne:
    case Opcode::Blt:
    case Opcode::Bge:
    case Opcode::Bl: {
      if (!taken(in.op, cpu.flags)) return ex.retire(pc + 4);
      if (in.op == Opcode::Bl) r[GuestCpu::kLr] = pc + 4;
      return ex.retire(pc + 4 + static_cast<std::uint32_t>(in.branch_offset() * 4));
    }
    case Opcode::Bx:
      if (a & 3) return ex.fault(FaultKind::UnalignedAccess, a);
      return ex.retire(a);

    case Opcode::Push: {
      const std::uint32_t sp = r[GuestCpu::kSp] - 4;
      if (cpu.mode == Mode::User && cpu.psp_limit != 0 && sp < cpu.psp_limit)
        return ex.fault(FaultKind::StackOverflow, sp);
      if (auto f = ex.check_data(sp, 4, Access::Write)) return *f;
      mem.store32(sp, a);
      r[GuestCpu::kSp] = sp;
      return ex.retire(pc + 4);
    }
    case Opcode::Pop: {
      const std::uint32_t sp = r[GuestCpu::kSp];
      if (auto f = ex.check_data(sp, 4, Access::Read)) return *f;
      const std::uint32_t v = mem.load32(sp);
      r[GuestCpu::kSp] = sp + 4;
      if (in.rd == GuestCpu::kSp) {
        r[GuestCpu::kSp] = v;
        return ex.retire(pc + 4);
      }
      return ex.write_reg(in.rd, v);
    }

    case Opcode::Svc:
      r[GuestCpu::kPc] = pc + 4;
      ++cpu.instret;
      enter_kernel(cpu);
      return StepResult::trap(in.svc_number());

    case Opcode::Halt:
      if (cpu.mode != Mode::Kernel) return ex.fault(FaultKind::BadOpcode, pc);
      r[GuestCpu::kPc] = pc + 4;
      ++cpu.instret;
      return StepResult::halted();
  }
  return ex.fault(FaultKind::BadOpcode, pc);
}

std::pair<StepResult, std::uint64_t> run_budget(GuestCpu& cpu, Memory& mem,
                                                const memprot::MpuConfig& mpu,
                                                std::uint64_t budget) {
  std::uint64_t used = 0;
  while (used < budget) {
    const StepResult res = step(cpu, mem, mpu);
    if (res.kind == StepResult::Kind::Fault) return {res, used};
    ++used;
    if (res.kind != StepResult::Kind::Retired) return {res, used};
  }
  return {StepResult::retired(), used};
}

}  // namespace minios::vmcu
