#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "core/error.hpp"
#include "core/scheduler.hpp"
#include "core/technique.hpp"
#include "metrics/trace.hpp"
#include "runtime/transport.hpp"

namespace dls::runtime {

enum class TraceDetail { none, process, all };

std::string_view trace_detail_name(TraceDetail d) noexcept;
std::optional<TraceDetail> parse_trace_detail(std::string_view s) noexcept;

/// Name of the environment variable consulted when a plan leaves the thread
/// technique unset. Value: "NAME" or "NAME,min_chunk".
inline constexpr const char* kThreadScheduleEnv = "DLS_THREAD_SCHEDULE";

struct ThreadSchedule {
  Technique technique = Technique::static_block;
  std::optional<std::uint64_t> min_chunk;
};

/// Throws setup-error on an unknown name or a bad minimum chunk.
ThreadSchedule parse_thread_schedule(std::string_view value);

struct RunPlan {
  std::uint64_t n = 0;
  std::uint32_t ranks = 1;
  std::uint32_t threads = 1;
  Technique proc_technique = Technique::nodlb;
  /// Unset: taken from DLS_THREAD_SCHEDULE, else STATIC.
  std::optional<Technique> thread_technique;
  /// Unset: half the mFSC chunk for (n, ranks), never below thread_min_chunk.
  std::optional<std::uint64_t> proc_min_chunk;
  /// Unset: from DLS_THREAD_SCHEDULE, else 1.
  std::optional<std::uint64_t> thread_min_chunk;
  std::uint32_t timesteps = 1;
  TransportKind transport = TransportKind::in_process;
  std::uint64_t seed = 0;
  /// Master answers ranks in strict round-robin turns instead of arrival
  /// order. Makes chunk logs independent of thread timing.
  bool serialize_requests = false;
  std::optional<FscParams> proc_fsc;
  std::optional<FscParams> thread_fsc;
  std::vector<double> proc_weights;
  TraceDetail trace = TraceDetail::all;
};

/// Fills the optional fields and validates. Throws setup-error (or
/// missing-parameter for FSC without parameters).
RunPlan resolve_plan(RunPlan plan);

struct TaskContext {
  std::uint64_t index = 0;
  std::uint32_t rank = 0;
  std::uint32_t thread = 0;
  std::uint32_t timestep = 0;
};

/// Executes one loop iteration. May throw; that aborts the run.
using TaskFn = std::function<void(const TaskContext&)>;

struct ProcChunkRecord {
  std::uint32_t rank = 0;
  std::uint64_t start = 0;
  std::uint64_t size = 0;
  std::uint64_t round = 0;
  double exec_time = 0.0;
  double sched_time = 0.0;
};

struct ThreadChunkRecord {
  std::uint32_t rank = 0;
  std::uint32_t thread = 0;
  std::uint64_t start = 0;
  std::uint64_t size = 0;
  std::uint64_t proc_start = 0;
  std::uint64_t proc_size = 0;
  double t_start = 0.0;
  double t_end = 0.0;
};

struct RunResult {
  std::uint32_t timestep = 0;
  double wall_time = 0.0;
  /// Seconds from run start to each rank's last process-level chunk end.
  std::vector<double> rank_finish;
  std::vector<std::vector<double>> thread_finish;
  /// Sum of request-to-response waits, including the final one that
  /// returned Terminate.
  std::vector<double> rank_sched_time;
  std::vector<std::uint64_t> rank_iterations;
  /// In issue order.
  std::vector<ProcChunkRecord> proc_chunks;
  std::vector<ThreadChunkRecord> thread_chunks;
  std::vector<metrics::TraceEvent> trace;
  std::vector<double> proc_weights;

  std::uint64_t sched_events_proc() const noexcept { return proc_chunks.size(); }
  std::uint64_t sched_events_thread() const noexcept { return thread_chunks.size(); }
};

/// Thrown when a task throws, the transport fails or the protocol is
/// violated. Carries whatever was recorded before the failure.
class RunAborted : public Error {
 public:
  RunAborted(Errc cause, const std::string& what, RunResult partial)
      : Error(Errc::runtime_failure, what), cause_(cause), partial_(std::move(partial)) {}
  Errc cause() const noexcept { return cause_; }
  const RunResult& partial() const noexcept { return partial_; }

 private:
  Errc cause_;
  RunResult partial_;
};

/// One master plus `ranks` worker teams of `threads` threads. Rank 0 hosts
/// the master on a separate control thread and also computes.
///
/// Threads are created per run and joined before it returns; the transport
/// persists across runs.
class Runtime {
 public:
  explicit Runtime(RunPlan plan);
  ~Runtime();
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  const RunPlan& plan() const noexcept { return plan_; }

  RunResult run_loop(const TaskFn& task);

  /// Runs the loop `timesteps` times. AWF-family process-level weights are
  /// carried from each step into the next.
  std::vector<RunResult> run_timesteps(const TaskFn& task, std::uint32_t timesteps);

 private:
  RunResult run_step(const TaskFn& task, std::uint32_t timestep, const Scheduler* carry_from,
                     std::unique_ptr<Scheduler>& master_out);
  SchedulerOptions proc_options() const;
  void ensure_transport();

  RunPlan plan_;
  std::unique_ptr<Transport> transport_;
};

}  // namespace dls::runtime
