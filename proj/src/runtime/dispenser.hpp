#pragma once

#include <cstdint>
#include <mutex>
#include <optional>

#include "core/scheduler.hpp"

namespace dls::runtime {

/// Sub-chunk handed to one thread, in global loop indices.
struct SubChunk {
  std::uint32_t thread = 0;
  std::uint64_t start = 0;
  std::uint64_t size = 0;
  ChunkAssignment local;  // as issued by the inner scheduler, zero-based

  std::uint64_t end() const noexcept { return start + size; }
};

/// Shared by the threads of one rank and bound to one process-level chunk.
/// Issuance is serialized by a mutex, so every call is linearizable.
class ThreadDispenser {
 public:
  ThreadDispenser(Technique technique, std::uint64_t chunk_start, std::uint64_t chunk_size,
                  std::uint32_t threads, SchedulerOptions options);

  std::optional<SubChunk> next(std::uint32_t thread);

  /// Feeds measured time back for adaptive thread-level techniques; a no-op
  /// for the others.
  void report(const SubChunk& sub, double exec_time);

  std::uint64_t chunk_start() const noexcept { return offset_; }
  std::uint64_t chunk_size() const noexcept { return size_; }

 private:
  std::mutex mu_;
  Scheduler scheduler_;
  std::uint64_t offset_;
  std::uint64_t size_;
  bool adaptive_;
};

}  // namespace dls::runtime
