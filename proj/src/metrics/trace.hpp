#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core/error.hpp"

namespace dls::metrics {

enum class TraceLevel : std::uint8_t { process, thread };

enum class TraceKind : std::uint8_t {
  chunk_start,
  chunk_end,
  wait_start,
  wait_end,
  timestep_start,
  timestep_end,
};

/// One timestamped record. Process-level events carry no thread id;
/// thread-level events always do. `t` is seconds since the run started.
struct TraceEvent {
  TraceLevel level = TraceLevel::process;
  std::uint32_t rank = 0;
  std::optional<std::uint32_t> thread;
  TraceKind kind = TraceKind::chunk_start;
  double t = 0.0;
  std::optional<std::uint64_t> start;
  std::optional<std::uint64_t> size;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

std::string_view level_name(TraceLevel level) noexcept;
std::string_view kind_name(TraceKind kind) noexcept;
std::optional<TraceLevel> parse_level(std::string_view s) noexcept;
std::optional<TraceKind> parse_kind(std::string_view s) noexcept;

class TraceError : public Error {
 public:
  TraceError(std::size_t index, const std::string& what)
      : Error(Errc::trace_error, "trace event " + std::to_string(index) + ": " + what),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Throws TraceError naming the first event that breaks time ordering or
/// start/end nesting within its (level, rank, thread) stream.
void validate_trace(std::span<const TraceEvent> trace);

struct WaitDecomposition {
  std::vector<double> rank_finish;
  std::vector<std::vector<double>> thread_finish;
  /// Global last rank finish minus each rank's finish.
  std::vector<double> process_idle;
  /// Rank's last thread finish minus each thread's finish.
  std::vector<std::vector<double>> thread_idle;
  double total_process_idle = 0.0;
  double total_thread_idle = 0.0;
};

/// Finishing time of a PE is its last chunk_end. Ranks and threads are
/// discovered from the events; a PE without chunks finishes at 0.
WaitDecomposition wait_decomposition(std::span<const TraceEvent> trace);

enum class TraceFormat { json_lines, csv };

std::optional<TraceFormat> parse_trace_format(std::string_view s) noexcept;

inline constexpr int kTraceSchemaVersion = 1;

void write_trace(std::ostream& out, std::span<const TraceEvent> trace, TraceFormat format);
void export_trace(const std::string& path, std::span<const TraceEvent> trace, TraceFormat format);

/// Reads either format; the header line decides which.
std::vector<TraceEvent> read_trace(std::istream& in);
std::vector<TraceEvent> import_trace(const std::string& path);

}  // namespace dls::metrics
