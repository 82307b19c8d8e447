#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dls/dls.h"
#include "json.hpp"

namespace bench {

enum class Kernel { mandelbrot, spinimage, synthetic, timestep };
// What one row of the raw table measures: an independent run (which may
// itself span `timesteps` steps) or one step of a single long run.
enum class Measure { repetitions, timesteps };
enum class TraceKeep { none, first, all };

std::string_view kernel_name(Kernel k);
std::string_view measure_name(Measure m);
std::string_view trace_keep_name(TraceKeep t);

struct Fsc {
  double overhead_s = 0.0;
  double sigma_s = 0.0;
};

struct BenchConfig {
  Kernel kernel = Kernel::synthetic;
  std::uint64_t n = 0;  // resolved; mandelbrot and spin images derive it
  std::uint32_t ranks = 4;
  std::uint32_t threads = 2;
  std::vector<dls_technique> proc_techniques;
  std::vector<dls_technique> thread_techniques;
  std::uint32_t repetitions = 20;
  std::uint32_t timesteps = 1;
  Measure measure = Measure::repetitions;
  std::uint64_t seed = 0;
  std::string output = "results";
  dls_transport transport = DLS_TRANSPORT_IN_PROCESS;
  dls_trace_detail trace_detail = DLS_TRACE_ALL;
  TraceKeep trace_keep = TraceKeep::first;
  dls_trace_format trace_format = DLS_TRACE_JSON_LINES;
  std::uint64_t proc_min_chunk = 0;
  std::uint64_t thread_min_chunk = 0;
  std::optional<Fsc> proc_fsc;
  std::optional<Fsc> thread_fsc;
  bool warmup = true;
  bool serialize_requests = false;
  bool allow_oversubscribe = false;
  bool override_excluded = false;

  dls_mandelbrot_spec mandelbrot{};
  dls_synthetic_spec synthetic{};
  std::vector<double> rank_multipliers;
  dls_spin_image_spec spin{};
  std::string cloud_file;

  /// Steps executed by one timed run.
  std::uint32_t steps_per_run() const {
    return measure == Measure::timesteps ? repetitions : timesteps;
  }
};

struct ConfigIssues {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty(); }
};

struct LoadedConfig {
  BenchConfig config;
  ConfigIssues issues;
};

/// Command-line switches that may only widen what the file allows.
struct ConfigOverrides {
  std::optional<std::string> output;
  bool serialize_requests = false;
  bool allow_oversubscribe = false;
  bool override_excluded = false;
};

/// Parses, applies defaults and overrides, and collects every violation.
/// An empty document is treated as `{}`.
LoadedConfig parse_config(std::string_view text, const ConfigOverrides& overrides = {});
LoadedConfig load_config(const std::string& path, const ConfigOverrides& overrides = {});

/// Semantic checks on an already-typed config.
void check_config(const BenchConfig& config, ConfigIssues& issues);

/// Canonical JSON form, with every default filled in.
nlohmann::json config_to_json(const BenchConfig& config);

/// Stable digest of everything that influences a cell's runs.
std::uint64_t run_digest(const BenchConfig& config);

std::vector<dls_technique> default_proc_techniques();
std::vector<dls_technique> default_thread_techniques();

}  // namespace bench
