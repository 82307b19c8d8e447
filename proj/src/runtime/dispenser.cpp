#include "runtime/dispenser.hpp"

namespace dls::runtime {

ThreadDispenser::ThreadDispenser(Technique technique, std::uint64_t chunk_start,
                                 std::uint64_t chunk_size, std::uint32_t threads,
                                 SchedulerOptions options)
    : scheduler_(technique, chunk_size, threads, std::move(options)),
      offset_(chunk_start),
      size_(chunk_size),
      adaptive_(is_adaptive(technique)) {}

std::optional<SubChunk> ThreadDispenser::next(std::uint32_t thread) {
  std::lock_guard lock(mu_);
  auto a = scheduler_.next_chunk(thread);
  if (!a) return std::nullopt;
  return SubChunk{thread, offset_ + a->start, a->size, *a};
}

void ThreadDispenser::report(const SubChunk& sub, double exec_time) {
  if (!adaptive_) return;
  std::lock_guard lock(mu_);
  scheduler_.report_completion(sub.local, exec_time, 0.0);
}

}  // namespace dls::runtime
