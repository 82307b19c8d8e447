#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace dls::kernels {

enum class Distribution { constant, uniform, gaussian, exponential, hotspot };

std::string_view distribution_name(Distribution d) noexcept;
std::optional<Distribution> parse_distribution(std::string_view s) noexcept;

/// Per-task cost = base_us * factor_i, factor_i drawn from the distribution
/// as a pure function of (seed, i).
///   uniform:     factor ~ U(param_a, param_b)
///   gaussian:    factor ~ N(param_a, param_b), floored at 1% of param_a
///   exponential: factor ~ Exp(rate = param_a)
///   hotspot:     ceil(param_a * N) contiguous tasks cost param_b, others 1
struct SyntheticSpec {
  Distribution distribution = Distribution::constant;
  double base_us = 100.0;
  double param_a = 0.0;
  double param_b = 0.0;
  std::uint64_t seed = 0;
  /// Cyclic shift of the cost pattern per time-step, as a fraction of N.
  /// 0 disables drift.
  double drift = 0.0;
};

/// Throws invalid-argument on parameters that could yield non-positive
/// costs or an out-of-range hotspot fraction.
void validate(const SyntheticSpec& spec);

/// First index of the hotspot block at step 0.
std::uint64_t hotspot_offset(const SyntheticSpec& spec, std::uint64_t n);
std::uint64_t hotspot_length(const SyntheticSpec& spec, std::uint64_t n);

/// Sampled cost of task i of n, microseconds.
double synthetic_cost_us(const SyntheticSpec& spec, std::uint64_t n, std::uint64_t i);

/// Cost of task i at time-step `step`: the step-0 pattern shifted
/// cyclically by round(drift * n * step) positions.
double timestep_cost_us(const SyntheticSpec& spec, std::uint64_t n, std::uint32_t step,
                        std::uint64_t i);

/// Spin-loop iterations per microsecond on this machine. Measured once on
/// first use; `recalibrate` forces a new measurement.
double spin_rate_per_us();
double recalibrate_spin_rate();

/// Executes a fixed amount of CPU work sized to take `us` microseconds on an
/// unloaded core. Returns the measured elapsed seconds.
double busy_wait_us(double us);

/// Executes exactly `iterations` dependent steps; returns a value the
/// compiler cannot discard.
std::uint64_t spin(std::uint64_t iterations) noexcept;

/// Synthetic task body with optional per-rank slowdown factors.
class SyntheticWorkload {
 public:
  SyntheticWorkload(SyntheticSpec spec, std::uint64_t n, std::vector<double> rank_multipliers = {});

  double cost_us(std::uint64_t i, std::uint32_t step, std::uint32_t rank) const;
  /// Spins for the task's cost; returns measured seconds.
  double run(std::uint64_t i, std::uint32_t step, std::uint32_t rank) const;

  const SyntheticSpec& spec() const noexcept { return spec_; }
  std::uint64_t size() const noexcept { return n_; }

 private:
  SyntheticSpec spec_;
  std::uint64_t n_;
  std::vector<double> rank_multipliers_;
  double rate_;
};

}  // namespace dls::kernels
