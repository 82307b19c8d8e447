#include "runtime/message.hpp"

#include <bit>
#include <string>

#include "core/error.hpp"

namespace dls::runtime {

namespace {

template <typename T>
std::uint8_t* put_le(std::uint8_t* p, T value) noexcept {
  for (std::size_t i = 0; i < sizeof(T); ++i) p[i] = static_cast<std::uint8_t>(value >> (8 * i));
  return p + sizeof(T);
}

template <typename T>
const std::uint8_t* get_le(const std::uint8_t* p, T& out) noexcept {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
  out = v;
  return p + sizeof(T);
}

}  // namespace

std::string_view message_kind_name(MessageKind kind) noexcept {
  switch (kind) {
    case MessageKind::work_request: return "WorkRequest";
    case MessageKind::work_assignment: return "WorkAssignment";
    case MessageKind::terminate: return "Terminate";
    case MessageKind::completion_report: return "CompletionReport";
  }
  return "?";
}

Frame encode_frame(const Message& m) noexcept {
  Frame f{};
  std::uint8_t* p = f.data();
  p = put_le<std::uint32_t>(p, static_cast<std::uint32_t>(kPayloadBytes));
  *p++ = static_cast<std::uint8_t>(m.kind);
  p = put_le<std::uint32_t>(p, m.rank);
  p = put_le<std::uint64_t>(p, m.start);
  p = put_le<std::uint64_t>(p, m.size);
  p = put_le<std::uint64_t>(p, std::bit_cast<std::uint64_t>(m.exec_time));
  put_le<std::uint64_t>(p, std::bit_cast<std::uint64_t>(m.sched_time));
  return f;
}

Message decode_frame(std::span<const std::uint8_t, kFrameBytes> frame) {
  const std::uint8_t* p = frame.data();
  std::uint32_t length = 0;
  p = get_le(p, length);
  if (length != kPayloadBytes)
    throw Error(Errc::protocol_violation, "frame length " + std::to_string(length) +
                                              " (expected " + std::to_string(kPayloadBytes) + ")");
  const std::uint8_t kind = *p++;
  if (kind > static_cast<std::uint8_t>(MessageKind::completion_report))
    throw Error(Errc::protocol_violation, "unknown message kind " + std::to_string(kind));
  Message m;
  m.kind = static_cast<MessageKind>(kind);
  p = get_le(p, m.rank);
  p = get_le(p, m.start);
  p = get_le(p, m.size);
  std::uint64_t bits = 0;
  p = get_le(p, bits);
  m.exec_time = std::bit_cast<double>(bits);
  get_le(p, bits);
  m.sched_time = std::bit_cast<double>(bits);
  return m;
}

}  // namespace dls::runtime
