#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace bench {

struct RepRow {
  std::uint32_t repetition = 0;
  double wall_time_s = 0.0;
  double cov = 0.0;
  double mean_max = 1.0;
  std::uint64_t sched_events_proc = 0;
  std::uint64_t sched_events_thread = 0;
};

struct CellRecord {
  std::string proc;
  std::string thread;
  bool ok = false;
  std::string error;
  std::uint64_t digest = 0;
  std::optional<std::uint64_t> output_digest;
  bool oversubscribed = false;
  std::vector<RepRow> rows;
};

nlohmann::json cell_to_json(const CellRecord& cell);
CellRecord cell_from_json(const nlohmann::json& j);

std::string cell_id(const std::string& proc, const std::string& thread);

/// Sorted repetition statistics of one cell's wall times.
struct Spread {
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Linear-interpolation quantiles (the common "type 7" rule).
Spread spread(std::vector<double> values);

struct CellStats {
  std::string proc;
  std::string thread;
  std::size_t reps = 0;
  Spread time;
  double mean_cov = 0.0;
  double mean_mean_max = 0.0;
  std::optional<double> improvement;  // percent vs baseline mean; + is faster
};

struct Winner {
  std::string role;
  std::optional<std::size_t> cell;  // index into SweepSummary::cells
};

struct SweepSummary {
  std::string measure;
  bool oversubscribed = false;
  std::vector<std::string> proc_order;
  std::vector<std::string> thread_order;
  std::vector<CellStats> cells;  // ok cells only, in sweep order
  std::vector<std::string> failed;
  std::optional<std::size_t> baseline;
  std::vector<Winner> winners;  // baseline, thread-only, proc-only, two-level, best
  std::vector<RepRow> raw;      // with cell index alongside
  std::vector<std::size_t> raw_cell;
};

inline constexpr const char* kBaselineProc = "NODLB";
inline constexpr const char* kBaselineThread = "STATIC";

/// Builds the summary from the records of one sweep directory.
SweepSummary summarize(const std::vector<CellRecord>& cells, const std::vector<std::string>& proc_order,
                       const std::vector<std::string>& thread_order, std::string measure,
                       bool oversubscribed);

/// Reads config.json and cells/*.json under `dir`. Throws std::runtime_error
/// naming the offending path.
SweepSummary load_sweep(const std::filesystem::path& dir);

nlohmann::json summary_to_json(const SweepSummary& s);

/// Writes raw.csv, improvement.csv, stats.csv, summary.csv and levels.csv.
std::vector<std::filesystem::path> write_csv_report(const SweepSummary& s,
                                                    const std::filesystem::path& dir);
/// Writes report.md.
std::filesystem::path write_markdown_report(const SweepSummary& s, const std::filesystem::path& dir);

/// Writes `content` to `path` through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace bench
