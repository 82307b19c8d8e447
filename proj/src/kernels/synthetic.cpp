#include "kernels/synthetic.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numbers>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace dls::kernels {

namespace {

// Two independent uniforms in (0, 1) for task i.
std::pair<double, double> uniforms(std::uint64_t seed, std::uint64_t i) noexcept {
  const std::uint64_t h1 = splitmix64(seed ^ splitmix64(2 * i));
  const std::uint64_t h2 = splitmix64(seed ^ splitmix64(2 * i + 1));
  constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
  return {(static_cast<double>(h1 >> 11) + 0.5) * scale, (static_cast<double>(h2 >> 11) + 0.5) * scale};
}

std::atomic<double> g_rate{0.0};
std::mutex g_rate_mu;

double measure_rate() {
  using Clock = std::chrono::steady_clock;
  std::uint64_t iters = 1 << 16;
  // grow until one trial takes ~10 ms
  while (true) {
    const auto t0 = Clock::now();
    volatile std::uint64_t sink = spin(iters);
    (void)sink;
    const double us = std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
    if (us > 10'000.0 || iters > (1ull << 40)) break;
    iters *= 2;
  }
  double best = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const auto t0 = Clock::now();
    volatile std::uint64_t sink = spin(iters);
    (void)sink;
    const double us = std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
    best = std::max(best, static_cast<double>(iters) / us);
  }
  return best;
}

}  // namespace

std::string_view distribution_name(Distribution d) noexcept {
  switch (d) {
    case Distribution::constant: return "constant";
    case Distribution::uniform: return "uniform";
    case Distribution::gaussian: return "gaussian";
    case Distribution::exponential: return "exponential";
    case Distribution::hotspot: return "hotspot";
  }
  return "?";
}

std::optional<Distribution> parse_distribution(std::string_view s) noexcept {
  for (auto d : {Distribution::constant, Distribution::uniform, Distribution::gaussian,
                 Distribution::exponential, Distribution::hotspot})
    if (distribution_name(d) == s) return d;
  return std::nullopt;
}

void validate(const SyntheticSpec& s) {
  if (!(s.base_us > 0.0) || !std::isfinite(s.base_us))
    throw Error(Errc::invalid_argument, "synthetic base cost must be positive");
  if (!std::isfinite(s.drift)) throw Error(Errc::invalid_argument, "drift must be finite");
  switch (s.distribution) {
    case Distribution::constant: break;
    case Distribution::uniform:
      if (!(s.param_a > 0.0 && s.param_b >= s.param_a))
        throw Error(Errc::invalid_argument, "uniform(a, b) needs 0 < a <= b");
      break;
    case Distribution::gaussian:
      if (!(s.param_a > 0.0 && s.param_b >= 0.0))
        throw Error(Errc::invalid_argument, "gaussian(mu, sigma) needs mu > 0 and sigma >= 0");
      break;
    case Distribution::exponential:
      if (!(s.param_a > 0.0)) throw Error(Errc::invalid_argument, "exponential(rate) needs rate > 0");
      break;
    case Distribution::hotspot:
      if (!(s.param_a > 0.0 && s.param_a <= 1.0))
        throw Error(Errc::invalid_argument, "hotspot fraction must lie in (0, 1]");
      if (!(s.param_b > 0.0)) throw Error(Errc::invalid_argument, "hotspot multiplier must be positive");
      break;
  }
}

std::uint64_t hotspot_length(const SyntheticSpec& spec, std::uint64_t n) {
  // the small epsilon keeps e.g. 0.1 * 1000 from rounding up to 101
  const double raw = spec.param_a * static_cast<double>(n);
  const auto len = static_cast<std::uint64_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  return std::clamp<std::uint64_t>(len, 1, n);
}

std::uint64_t hotspot_offset(const SyntheticSpec& spec, std::uint64_t n) {
  const std::uint64_t len = hotspot_length(spec, n);
  return splitmix64(spec.seed ^ 0x486F7473706F74ull) % (n - len + 1);
}

double synthetic_cost_us(const SyntheticSpec& spec, std::uint64_t n, std::uint64_t i) {
  switch (spec.distribution) {
    case Distribution::constant: return spec.base_us;
    case Distribution::uniform: {
      const double u = uniforms(spec.seed, i).first;
      return spec.base_us * (spec.param_a + (spec.param_b - spec.param_a) * u);
    }
    case Distribution::gaussian: {
      auto [u1, u2] = uniforms(spec.seed, i);
      const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
      return spec.base_us * std::max(spec.param_a + spec.param_b * z, 0.01 * spec.param_a);
    }
    case Distribution::exponential: {
      const double u = uniforms(spec.seed, i).first;
      return spec.base_us * (-std::log(u) / spec.param_a);
    }
    case Distribution::hotspot: {
      const std::uint64_t off = hotspot_offset(spec, n);
      const bool hot = i >= off && i < off + hotspot_length(spec, n);
      return spec.base_us * (hot ? spec.param_b : 1.0);
    }
  }
  return spec.base_us;
}

double timestep_cost_us(const SyntheticSpec& spec, std::uint64_t n, std::uint32_t step,
                        std::uint64_t i) {
  if (spec.drift == 0.0 || step == 0) return synthetic_cost_us(spec, n, i);
  const double raw = std::fmod(spec.drift * static_cast<double>(n) * step, static_cast<double>(n));
  auto shift = static_cast<std::uint64_t>(std::llround(raw < 0 ? raw + static_cast<double>(n) : raw)) % n;
  // task i now carries the cost that task i - shift had at step 0
  const std::uint64_t src = (i + n - shift) % n;
  return synthetic_cost_us(spec, n, src);
}

std::uint64_t spin(std::uint64_t iterations) noexcept {
  std::uint64_t x = 0x9E3779B97F4A7C15ull;
  for (std::uint64_t k = 0; k < iterations; ++k) {
    x ^= x << 13;
    x ^= x >> 7;
    x ^= x << 17;
  }
  return x;
}

double spin_rate_per_us() {
  double r = g_rate.load();
  if (r > 0.0) return r;
  std::lock_guard lock(g_rate_mu);
  r = g_rate.load();
  if (r > 0.0) return r;
  r = measure_rate();
  g_rate.store(r);
  return r;
}

double recalibrate_spin_rate() {
  std::lock_guard lock(g_rate_mu);
  const double r = measure_rate();
  g_rate.store(r);
  return r;
}

double busy_wait_us(double us) {
  using Clock = std::chrono::steady_clock;
  const double rate = spin_rate_per_us();
  const auto t0 = Clock::now();
  volatile std::uint64_t sink = spin(static_cast<std::uint64_t>(std::max(0.0, us) * rate));
  (void)sink;
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

SyntheticWorkload::SyntheticWorkload(SyntheticSpec spec, std::uint64_t n,
                                     std::vector<double> rank_multipliers)
    : spec_(spec), n_(n), rank_multipliers_(std::move(rank_multipliers)), rate_(0.0) {
  validate(spec_);
  if (n_ == 0) throw Error(Errc::invalid_argument, "synthetic workload needs at least one task");
  for (double m : rank_multipliers_)
    if (!(m > 0.0) || !std::isfinite(m))
      throw Error(Errc::invalid_argument, "rank cost multipliers must be positive");
  rate_ = spin_rate_per_us();
}

double SyntheticWorkload::cost_us(std::uint64_t i, std::uint32_t step, std::uint32_t rank) const {
  const double m = rank < rank_multipliers_.size() ? rank_multipliers_[rank] : 1.0;
  return timestep_cost_us(spec_, n_, step, i) * m;
}

double SyntheticWorkload::run(std::uint64_t i, std::uint32_t step, std::uint32_t rank) const {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  volatile std::uint64_t sink = spin(static_cast<std::uint64_t>(cost_us(i, step, rank) * rate_));
  (void)sink;
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace dls::kernels
