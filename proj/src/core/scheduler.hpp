#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/technique.hpp"

namespace dls {

/// Fixed-size chunking inputs: per-chunk scheduling overhead h and the
/// standard deviation of iteration execution times, both in seconds.
struct FscParams {
  double overhead_s = 0.0;
  double sigma_s = 0.0;
};

struct SchedulerOptions {
  std::uint64_t min_chunk = 1;
  std::uint64_t seed = 0;
  std::optional<FscParams> fsc;
  /// Empty means all ones. Otherwise P positive entries summing to P.
  std::vector<double> initial_weights;
};

/// Half-open iteration range [start, start + size) handed to one PE.
struct ChunkAssignment {
  std::uint32_t pe = 0;
  std::uint64_t start = 0;
  std::uint64_t size = 0;
  std::uint64_t batch_id = 0;
  std::uint64_t round = 0;

  std::uint64_t end() const noexcept { return start + size; }
  friend bool operator==(const ChunkAssignment&, const ChunkAssignment&) = default;
};

struct ChunkSample {
  std::uint64_t size = 0;
  double exec_time = 0.0;
  double sched_time = 0.0;
};

struct PerformanceRecord {
  std::uint32_t pe_id = 0;
  std::uint64_t chunks_done = 0;
  std::uint64_t iterations_done = 0;
  double exec_time_sum = 0.0;
  double sched_time_sum = 0.0;
  std::vector<ChunkSample> per_chunk_samples;
  std::vector<double> timestep_wap;

  /// Zero until the PE has completed at least one iteration.
  double mean_iteration_time() const noexcept {
    return iterations_done > 0 ? exec_time_sum / static_cast<double>(iterations_done) : 0.0;
  }
};

/// Fixed chunk of modified fixed-size chunking: as many chunks as practical
/// factoring issues, i.e. log2(N/P) chunks per PE.
std::uint64_t mfsc_chunk_size(std::uint64_t n, std::uint32_t p);

/// Process-level minimum chunk: half the mFSC chunk, at least 1.
std::uint64_t default_proc_min_chunk(std::uint64_t n, std::uint32_t p);

std::uint64_t fsc_chunk_size(std::uint64_t n, std::uint32_t p, const FscParams& params);

/// Self-scheduling state for one loop of N iterations over P processing
/// elements. Not thread-safe; callers serialize access.
///
/// Chunks are placed contiguously low-to-high in request order, except for
/// STATIC/NODLB where PE p always receives block p and a PE that already
/// holds its block (or whose block is empty) is told Exhausted.
class Scheduler {
 public:
  Scheduler(Technique technique, std::uint64_t n, std::uint32_t p, SchedulerOptions options = {});

  std::optional<ChunkAssignment> next_chunk(std::uint32_t pe);

  void report_completion(const ChunkAssignment& assignment, double exec_time, double sched_time);

  /// Folds the statistics gathered since the previous call into the
  /// time-step history and recomputes weights. AWF family only.
  std::span<const double> update_weights_timestep(std::uint64_t timestep_index);

  Technique technique() const noexcept { return technique_; }
  std::uint64_t total() const noexcept { return total_; }
  std::uint32_t pes() const noexcept { return pes_; }
  std::uint64_t remaining() const noexcept { return remaining_; }
  std::uint64_t min_chunk() const noexcept { return min_chunk_; }
  std::uint64_t batch_remaining() const noexcept { return batch_remaining_; }
  std::uint64_t chunks_issued() const noexcept { return round_; }
  std::size_t outstanding() const noexcept { return outstanding_.size(); }
  bool exhausted() const noexcept { return remaining_ == 0; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const PerformanceRecord> stats() const noexcept { return stats_; }

 private:
  friend void carry_weights(const Scheduler& previous, Scheduler& next);

  // Running Σ j·τ_j and Σ j over a PE's weighted samples.
  struct WeightedHistory {
    double weighted_tau = 0.0;
    double index_sum = 0.0;
    bool empty() const noexcept { return index_sum <= 0.0; }
    double average() const noexcept { return weighted_tau / index_sum; }
  };

  struct StepAccumulator {
    double exec = 0.0;
    double sched = 0.0;
    std::uint64_t iterations = 0;
  };

  struct AfMoments {
    std::uint64_t samples = 0;
    double time_sum = 0.0;
    double size_sum = 0.0;
    double time_sq_over_size = 0.0;
  };

  struct BatchProgress {
    std::uint64_t outstanding = 0;
    bool fully_issued = false;
    std::vector<StepAccumulator> per_pe;
  };

  void check_pe(std::uint32_t pe) const;
  std::optional<ChunkAssignment> next_static(std::uint32_t pe);
  void open_batch_if_needed();
  std::uint64_t weighted_batch_chunk(std::uint32_t pe) const;
  std::uint64_t af_chunk(std::uint32_t pe) const;
  bool includes_sched_time() const noexcept;
  void recompute_weights(const std::vector<WeightedHistory>& history,
                         std::vector<double>* wap_out = nullptr);

  Technique technique_;
  std::uint64_t total_;
  std::uint32_t pes_;
  std::uint64_t remaining_;
  std::uint64_t min_chunk_;

  std::uint64_t round_ = 0;
  std::uint64_t batch_id_ = 0;
  std::uint64_t batch_remaining_ = 0;
  std::uint64_t batch_chunk_ = 0;

  std::uint64_t fixed_chunk_ = 0;   // FSC / mFSC
  std::uint64_t static_block_ = 0;  // STATIC / NODLB
  std::vector<bool> static_taken_;
  std::uint64_t tss_next_ = 0;
  std::uint64_t tss_delta_ = 0;
  std::uint64_t tss_last_ = 1;
  std::uint64_t rand_lo_ = 1;
  std::uint64_t rand_hi_ = 1;
  Xorshift64Star rng_;

  std::vector<double> weights_;
  std::vector<PerformanceRecord> stats_;
  std::vector<StepAccumulator> step_acc_;
  std::vector<AfMoments> af_;
  std::vector<WeightedHistory> chunk_history_;
  std::vector<WeightedHistory> step_history_;
  std::uint64_t update_index_ = 0;

  std::unordered_map<std::uint64_t, ChunkAssignment> outstanding_;
  std::map<std::uint64_t, BatchProgress> batches_;
};

/// Seeds `next` with the weights and adaptive history learned by `previous`.
/// Both must run the same AWF-family technique on the same P.
void carry_weights(const Scheduler& previous, Scheduler& next);

}  // namespace dls
