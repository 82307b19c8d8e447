#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "bench/config.hpp"
#include "bench/results.hpp"

namespace bench {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2, kExitPartial = 3 };

struct SweepOptions {
  std::ostream* log = nullptr;  // progress lines; null for silence
  unsigned logical_cores = 0;   // 0: ask the OS
  // Called before each executed cell; an exception fails that cell.
  std::function<void(dls_technique proc, dls_technique thread)> before_cell;
};

struct SweepOutcome {
  int exit_code = kExitOk;
  std::size_t executed = 0;
  std::size_t reused = 0;
  std::size_t failed = 0;
  std::vector<std::string> errors;
  SweepSummary summary;
};

/// Every configured (proc, thread) pair once, plus NODLB/STATIC if absent.
std::vector<std::pair<dls_technique, dls_technique>> sweep_cells(const BenchConfig& config);

/// Runs the cells one after another, writing per-cell records under
/// `<output>/cells` and reusing any record whose digest still matches.
SweepOutcome run_sweep(const BenchConfig& config, const SweepOptions& options = {});

/// Summary plus csv files and sweep.json for the records found in `dir`.
SweepSummary aggregate_sweep(const std::filesystem::path& dir);

}  // namespace bench
