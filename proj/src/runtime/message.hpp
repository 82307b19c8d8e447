#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace dls::runtime {

enum class MessageKind : std::uint8_t {
  work_request = 0,
  work_assignment = 1,
  terminate = 2,
  completion_report = 3,
};

std::string_view message_kind_name(MessageKind kind) noexcept;

/// `rank` is the sender for requests and reports, the destination for
/// assignments and Terminate.
struct Message {
  MessageKind kind = MessageKind::work_request;
  std::uint32_t rank = 0;
  std::uint64_t start = 0;
  std::uint64_t size = 0;
  double exec_time = 0.0;
  double sched_time = 0.0;

  friend bool operator==(const Message&, const Message&) = default;
};

// u8 kind, u32 rank, u64 start, u64 size, f64 exec, f64 sched
inline constexpr std::size_t kPayloadBytes = 1 + 4 + 8 + 8 + 8 + 8;
// u32 length prefix + payload
inline constexpr std::size_t kFrameBytes = 4 + kPayloadBytes;

using Frame = std::array<std::uint8_t, kFrameBytes>;

/// Little-endian, independent of host byte order.
Frame encode_frame(const Message& m) noexcept;

/// Throws protocol-violation on a wrong length prefix or unknown kind.
Message decode_frame(std::span<const std::uint8_t, kFrameBytes> frame);

}  // namespace dls::runtime
