#pragma once

// Guest/kernel binary interface: syscall numbers, status codes, and the
// layouts of structures the kernel writes into guest memory.
//
// Calling convention: arguments in r0-r3, result in r0. r0-r3 and r12 are
// caller-saved, r4-r8/r10/r11 callee-saved. r9 holds the image base for
// position-independent addressing and is never written by guest code.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace minios::abi {

inline constexpr std::uint32_t kAbiVersion = 1;

struct SyscallEntry {
  std::string_view name;
  std::uint8_t number;
};

inline constexpr std::array<SyscallEntry, 31> kSyscalls{{
    {"exit", 0},
    {"usb_write", 1},
    {"display_write", 2},
    {"led_write", 3},
    {"button_read", 4},
    {"sensor_read", 5},
    {"thread_create", 6},
    {"thread_sleep", 7},
    {"thread_yield", 8},
    {"thread_set_priority", 9},
    {"thread_signal", 10},
    {"thread_wait", 11},
    {"lock_create", 12},
    {"lock_acquire", 13},
    {"lock_release", 14},
    {"sem_create", 15},
    {"sem_wait", 16},
    {"sem_post", 17},
    {"mon_enter", 18},
    {"mon_exit", 19},
    {"mon_wait", 20},
    {"mon_notify", 21},
    {"barrier_create", 22},
    {"barrier_wait", 23},
    {"fs_open", 24},
    {"fs_read", 25},
    {"fs_close", 26},
    {"fs_readdir", 27},
    {"net_write", 28},
    {"ioevent_register", 29},
    {"execv", 30},
}};

inline constexpr std::uint8_t kSysCount = 31;

namespace sys {
inline constexpr std::uint8_t Exit = 0;
inline constexpr std::uint8_t UsbWrite = 1;
inline constexpr std::uint8_t DisplayWrite = 2;
inline constexpr std::uint8_t LedWrite = 3;
inline constexpr std::uint8_t ButtonRead = 4;
inline constexpr std::uint8_t SensorRead = 5;
inline constexpr std::uint8_t ThreadCreate = 6;
inline constexpr std::uint8_t ThreadSleep = 7;
inline constexpr std::uint8_t ThreadYield = 8;
inline constexpr std::uint8_t ThreadSetPriority = 9;
inline constexpr std::uint8_t ThreadSignal = 10;
inline constexpr std::uint8_t ThreadWait = 11;
inline constexpr std::uint8_t LockCreate = 12;
inline constexpr std::uint8_t LockAcquire = 13;
inline constexpr std::uint8_t LockRelease = 14;
inline constexpr std::uint8_t SemCreate = 15;
inline constexpr std::uint8_t SemWait = 16;
inline constexpr std::uint8_t SemPost = 17;
inline constexpr std::uint8_t MonEnter = 18;
inline constexpr std::uint8_t MonExit = 19;
inline constexpr std::uint8_t MonWait = 20;
inline constexpr std::uint8_t MonNotify = 21;
inline constexpr std::uint8_t BarrierCreate = 22;
inline constexpr std::uint8_t BarrierWait = 23;
inline constexpr std::uint8_t FsOpen = 24;
inline constexpr std::uint8_t FsRead = 25;
inline constexpr std::uint8_t FsClose = 26;
inline constexpr std::uint8_t FsReaddir = 27;
inline constexpr std::uint8_t NetWrite = 28;
inline constexpr std::uint8_t IoeventRegister = 29;
inline constexpr std::uint8_t Execv = 30;
}  // namespace sys

constexpr std::optional<std::uint8_t> syscall_number(std::string_view name) {
  for (const auto& e : kSyscalls)
    if (e.name == name) return e.number;
  return std::nullopt;
}

// Status codes returned in r0.
inline constexpr std::int32_t kOk = 0;
inline constexpr std::int32_t kErr = -1;
inline constexpr std::int32_t kErrNoStack = -2;
inline constexpr std::int32_t kExecKilled = -2;
inline constexpr std::int32_t kEnosys = -38;

// Thread priorities.
inline constexpr std::uint32_t kPrioMin = 0;
inline constexpr std::uint32_t kPrioMax = 7;
inline constexpr std::uint32_t kPrioDefault = 4;

// sensor_read selectors.
inline constexpr std::uint32_t kSensorLight = 0;
inline constexpr std::uint32_t kSensorTemp = 1;

// ioevent_register event ids.
inline constexpr std::uint32_t kEventUartLine = 0;
inline constexpr std::uint32_t kEventNetworkFrame = 1;

/// NetFrame as seen by guest code (net_write argument and network event
/// argument block). Little-endian.
///   +0 u16 src   +2 u16 dst   +4 u8 seq   +5 u8 len   +6 u16 reserved
///   +8 payload[100]
namespace netframe {
inline constexpr std::uint32_t kSrc = 0;
inline constexpr std::uint32_t kDst = 2;
inline constexpr std::uint32_t kSeq = 4;
inline constexpr std::uint32_t kLen = 5;
inline constexpr std::uint32_t kPayload = 8;
inline constexpr std::uint32_t kMaxPayload = 100;
inline constexpr std::uint32_t kSize = kPayload + kMaxPayload;
}  // namespace netframe

/// UartLine event argument block: +0 u32 length, +4 text (zero-terminated,
/// newline stripped), at most kMaxLine bytes of text.
namespace uartline {
inline constexpr std::uint32_t kLen = 0;
inline constexpr std::uint32_t kText = 4;
inline constexpr std::uint32_t kMaxLine = 120;
inline constexpr std::uint32_t kSize = kText + kMaxLine + 4;
}  // namespace uartline

}  // namespace minios::abi
