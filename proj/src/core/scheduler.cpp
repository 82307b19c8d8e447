#include "core/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace dls {

namespace {

constexpr double kMinTau = 1e-15;
constexpr double kWeightTolerance = 1e-9;

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) noexcept { return a / b + (a % b != 0); }

std::uint64_t ceil_to_count(double x) {
  if (!(x > 0.0)) return 0;
  if (x >= 1.8e19) return UINT64_MAX;
  return static_cast<std::uint64_t>(std::ceil(x));
}

std::uint64_t round_half_up(double x) {
  if (!(x > 0.0)) return 0;
  return static_cast<std::uint64_t>(std::floor(x + 0.5));
}

[[noreturn]] void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace

std::uint64_t mfsc_chunk_size(std::uint64_t n, std::uint32_t p) {
  if (n == 0 || p == 0) fail(Errc::invalid_argument, "mFSC needs N >= 1 and P >= 1");
  const double per_pe = static_cast<double>(n) / static_cast<double>(p);
  const double chunks_per_pe = std::max(1.0, std::log2(per_pe));
  return std::max<std::uint64_t>(1, ceil_to_count(per_pe / chunks_per_pe));
}

std::uint64_t default_proc_min_chunk(std::uint64_t n, std::uint32_t p) {
  return std::max<std::uint64_t>(1, mfsc_chunk_size(n, p) / 2);
}

std::uint64_t fsc_chunk_size(std::uint64_t n, std::uint32_t p, const FscParams& params) {
  if (n == 0 || p == 0) fail(Errc::invalid_argument, "FSC needs N >= 1 and P >= 1");
  if (!(params.sigma_s > 0.0) || !(params.overhead_s >= 0.0))
    fail(Errc::invalid_argument, "FSC needs sigma > 0 and overhead >= 0");
  if (p == 1) return std::max<std::uint64_t>(1, ceil_div(n, 2));
  const double base = std::sqrt(2.0) * static_cast<double>(n) * params.overhead_s /
                      (params.sigma_s * p * std::sqrt(std::log(static_cast<double>(p))));
  return std::max<std::uint64_t>(1, ceil_to_count(std::pow(base, 2.0 / 3.0)));
}

Scheduler::Scheduler(Technique technique, std::uint64_t n, std::uint32_t p, SchedulerOptions options)
    : technique_(technique),
      total_(n),
      pes_(p),
      remaining_(n),
      min_chunk_(options.min_chunk),
      rng_(options.seed) {
  if (n == 0) fail(Errc::invalid_argument, "N must be at least 1");
  if (p == 0) fail(Errc::invalid_argument, "P must be at least 1");
  if (min_chunk_ == 0) fail(Errc::invalid_argument, "min_chunk must be at least 1");
  if (technique == Technique::fsc && !options.fsc)
    fail(Errc::missing_parameter, "FSC requires overhead h and sigma");

  weights_.assign(p, 1.0);
  if (!options.initial_weights.empty()) {
    if (options.initial_weights.size() != p)
      fail(Errc::invalid_argument, "initial_weights must have one entry per PE");
    double sum = 0.0;
    for (double w : options.initial_weights) {
      if (!(w > 0.0) || !std::isfinite(w)) fail(Errc::invalid_argument, "weights must be positive");
      sum += w;
    }
    if (std::abs(sum - p) > kWeightTolerance * p)
      fail(Errc::invalid_argument, "weights must sum to P");
    weights_ = options.initial_weights;
  }

  stats_.resize(p);
  for (std::uint32_t i = 0; i < p; ++i) stats_[i].pe_id = i;
  step_acc_.resize(p);
  af_.resize(p);
  chunk_history_.resize(p);
  step_history_.resize(p);

  switch (technique) {
    case Technique::static_block:
    case Technique::nodlb:
      static_block_ = ceil_div(n, p);
      static_taken_.assign(p, false);
      break;
    case Technique::fsc: fixed_chunk_ = fsc_chunk_size(n, p, *options.fsc); break;
    case Technique::mfsc: fixed_chunk_ = mfsc_chunk_size(n, p); break;
    case Technique::tss: {
      const std::uint64_t first = std::max<std::uint64_t>(1, ceil_div(n, 2ULL * p));
      const std::uint64_t count = ceil_div(2 * n, first + tss_last_);
      tss_next_ = first;
      tss_delta_ = count > 1 ? (first - tss_last_) / (count - 1) : 0;
      break;
    }
    case Technique::rand:
      rand_lo_ = std::max<std::uint64_t>(1, n / (100ULL * p));
      rand_hi_ = std::max<std::uint64_t>(rand_lo_, n / (2ULL * p));
      break;
    default: break;
  }
}

void Scheduler::check_pe(std::uint32_t pe) const {
  if (pe >= pes_)
    fail(Errc::invalid_argument,
         "pe_id " + std::to_string(pe) + " out of range [0," + std::to_string(pes_) + ")");
}

std::optional<ChunkAssignment> Scheduler::next_static(std::uint32_t pe) {
  if (static_taken_[pe]) return std::nullopt;
  static_taken_[pe] = true;
  const std::uint64_t start = static_block_ * pe;
  if (start >= total_) return std::nullopt;
  ChunkAssignment a{pe, start, std::min(static_block_, total_ - start), 0, round_++};
  remaining_ -= a.size;
  outstanding_.emplace(a.start, a);
  return a;
}

void Scheduler::open_batch_if_needed() {
  if (batch_remaining_ > 0) return;
  if (round_ > 0) ++batch_id_;
  batch_remaining_ = ceil_div(remaining_, 2);
  batch_chunk_ = ceil_div(batch_remaining_, pes_);
  if (technique_ == Technique::awf_b || technique_ == Technique::awf_d)
    batches_[batch_id_].per_pe.resize(pes_);
}

std::uint64_t Scheduler::weighted_batch_chunk(std::uint32_t pe) const {
  const std::uint64_t share = technique_ == Technique::fac
                                  ? batch_chunk_
                                  : round_half_up(weights_[pe] * static_cast<double>(batch_chunk_));
  return std::min(std::max<std::uint64_t>(share, 1), batch_remaining_);
}

std::uint64_t Scheduler::af_chunk(std::uint32_t pe) const {
  if (af_[pe].samples < 2) return std::min(batch_chunk_, batch_remaining_);

  // Per-iteration mean and variance; PEs without enough samples borrow the
  // average of those that have them.
  std::vector<double> mu(pes_, 0.0), var(pes_, 0.0);
  std::vector<bool> known(pes_, false);
  double mu_known = 0.0, var_known = 0.0;
  std::uint32_t n_known = 0;
  for (std::uint32_t q = 0; q < pes_; ++q) {
    const AfMoments& m = af_[q];
    if (m.samples < 2 || m.size_sum <= 0.0) continue;
    const double mean = std::max(m.time_sum / m.size_sum, kMinTau);
    const double ss = m.time_sq_over_size - 2.0 * mean * m.time_sum + mean * mean * m.size_sum;
    mu[q] = mean;
    var[q] = std::max(0.0, ss / static_cast<double>(m.samples - 1));
    known[q] = true;
    mu_known += mu[q];
    var_known += var[q];
    ++n_known;
  }
  mu_known /= n_known;
  var_known /= n_known;

  double d = 0.0, inv_mu_sum = 0.0;
  for (std::uint32_t q = 0; q < pes_; ++q) {
    const double m = known[q] ? mu[q] : mu_known;
    const double v = known[q] ? var[q] : var_known;
    d += v / m;
    inv_mu_sum += 1.0 / m;
  }
  const double t = static_cast<double>(remaining_) / inv_mu_sum;
  const double x = (d + 2.0 * t - std::sqrt(d * d + 4.0 * d * t)) / (2.0 * mu[pe]);
  return std::max<std::uint64_t>(1, ceil_to_count(x));
}

std::optional<ChunkAssignment> Scheduler::next_chunk(std::uint32_t pe) {
  check_pe(pe);
  if (remaining_ == 0) return std::nullopt;
  if (is_static_split(technique_)) return next_static(pe);

  std::uint64_t size = 0;
  switch (technique_) {
    case Technique::ss: size = 1; break;
    case Technique::fsc:
    case Technique::mfsc: size = fixed_chunk_; break;
    case Technique::gss: size = ceil_div(remaining_, pes_); break;
    case Technique::tss:
      size = tss_next_;
      tss_next_ = tss_next_ > tss_last_ + tss_delta_ ? tss_next_ - tss_delta_ : tss_last_;
      break;
    case Technique::rand: size = rng_.uniform(rand_lo_, rand_hi_); break;
    case Technique::af:
      open_batch_if_needed();
      size = af_chunk(pe);
      break;
    default:
      open_batch_if_needed();
      size = weighted_batch_chunk(pe);
      break;
  }
  size = std::min(std::max(size, min_chunk_), remaining_);

  ChunkAssignment a{pe, total_ - remaining_, size, batch_id_, round_++};
  remaining_ -= size;
  if (is_batched(technique_)) {
    batch_remaining_ -= std::min(size, batch_remaining_);
    batch_remaining_ = std::min(batch_remaining_, remaining_);
    auto it = batches_.find(a.batch_id);
    if (it != batches_.end()) {
      ++it->second.outstanding;
      if (batch_remaining_ == 0) it->second.fully_issued = true;
    }
  }
  outstanding_.emplace(a.start, a);
  return a;
}

bool Scheduler::includes_sched_time() const noexcept {
  return technique_ == Technique::awf_d || technique_ == Technique::awf_e;
}

void Scheduler::report_completion(const ChunkAssignment& assignment, double exec_time,
                                  double sched_time) {
  auto it = outstanding_.find(assignment.start);
  if (it == outstanding_.end() || it->second.pe != assignment.pe ||
      it->second.size != assignment.size)
    fail(Errc::protocol_violation, "completion for unknown or already reported chunk [" +
                                       std::to_string(assignment.start) + ", +" +
                                       std::to_string(assignment.size) + ") from PE " +
                                       std::to_string(assignment.pe));
  if (!(exec_time >= 0.0) || !(sched_time >= 0.0))
    fail(Errc::invalid_argument, "reported times must be non-negative");
  const ChunkAssignment a = it->second;
  outstanding_.erase(it);

  PerformanceRecord& rec = stats_[a.pe];
  ++rec.chunks_done;
  rec.iterations_done += a.size;
  rec.exec_time_sum += exec_time;
  rec.sched_time_sum += sched_time;
  rec.per_chunk_samples.push_back({a.size, exec_time, sched_time});

  StepAccumulator& step = step_acc_[a.pe];
  step.exec += exec_time;
  step.sched += sched_time;
  step.iterations += a.size;

  AfMoments& m = af_[a.pe];
  ++m.samples;
  m.time_sum += exec_time;
  m.size_sum += static_cast<double>(a.size);
  m.time_sq_over_size += exec_time * exec_time / static_cast<double>(a.size);

  const double cost = exec_time + (includes_sched_time() ? sched_time : 0.0);
  if (technique_ == Technique::awf_c || technique_ == Technique::awf_e) {
    const double j = static_cast<double>(++update_index_);
    const double tau = cost / static_cast<double>(a.size);
    chunk_history_[a.pe].weighted_tau += j * tau;
    chunk_history_[a.pe].index_sum += j;
    recompute_weights(chunk_history_);
  } else if (technique_ == Technique::awf_b || technique_ == Technique::awf_d) {
    auto bit = batches_.find(a.batch_id);
    if (bit == batches_.end()) return;
    BatchProgress& batch = bit->second;
    batch.per_pe[a.pe].exec += cost;
    batch.per_pe[a.pe].iterations += a.size;
    --batch.outstanding;
    if (batch.fully_issued && batch.outstanding == 0) {
      const double j = static_cast<double>(++update_index_);
      for (std::uint32_t q = 0; q < pes_; ++q) {
        const StepAccumulator& acc = batch.per_pe[q];
        if (acc.iterations == 0) continue;
        const double tau = acc.exec / static_cast<double>(acc.iterations);
        chunk_history_[q].weighted_tau += j * tau;
        chunk_history_[q].index_sum += j;
      }
      batches_.erase(bit);
      recompute_weights(chunk_history_);
    }
  }
}

void Scheduler::recompute_weights(const std::vector<WeightedHistory>& history,
                                  std::vector<double>* wap_out) {
  double known_sum = 0.0;
  std::uint32_t known = 0;
  for (const auto& h : history) {
    if (h.empty()) continue;
    known_sum += std::max(h.average(), kMinTau);
    ++known;
  }
  if (known == 0) return;
  const double fill = known_sum / known;

  std::vector<double> wap(pes_);
  double inv_sum = 0.0;
  for (std::uint32_t q = 0; q < pes_; ++q) {
    wap[q] = history[q].empty() ? fill : std::max(history[q].average(), kMinTau);
    inv_sum += 1.0 / wap[q];
  }
  for (std::uint32_t q = 0; q < pes_; ++q)
    weights_[q] = static_cast<double>(pes_) * (1.0 / wap[q]) / inv_sum;
  if (wap_out) *wap_out = std::move(wap);
}

std::span<const double> Scheduler::update_weights_timestep(std::uint64_t timestep_index) {
  if (!is_awf_family(technique_))
    fail(Errc::invalid_argument, std::string("time-step weight update is undefined for ") +
                                     std::string(technique_name(technique_)));
  const bool any = std::any_of(step_acc_.begin(), step_acc_.end(),
                               [](const StepAccumulator& s) { return s.iterations > 0; });
  if (!any) fail(Errc::invalid_argument, "no completed time-step statistics to learn from");

  const double j = static_cast<double>(timestep_index + 1);
  for (std::uint32_t q = 0; q < pes_; ++q) {
    const StepAccumulator& s = step_acc_[q];
    if (s.iterations == 0) continue;
    const double cost = s.exec + (includes_sched_time() ? s.sched : 0.0);
    const double tau = cost / static_cast<double>(s.iterations);
    step_history_[q].weighted_tau += j * tau;
    step_history_[q].index_sum += j;
  }
  std::vector<double> wap;
  recompute_weights(step_history_, &wap);
  for (std::uint32_t q = 0; q < pes_; ++q) stats_[q].timestep_wap.push_back(wap[q]);
  std::fill(step_acc_.begin(), step_acc_.end(), StepAccumulator{});
  return weights_;
}

void carry_weights(const Scheduler& previous, Scheduler& next) {
  if (!is_awf_family(previous.technique_) || previous.technique_ != next.technique_)
    fail(Errc::invalid_argument, "weights can only be carried between AWF-family states of the same technique");
  if (previous.pes_ != next.pes_)
    fail(Errc::invalid_argument, "cannot carry weights across different PE counts (" +
                                     std::to_string(previous.pes_) + " vs " +
                                     std::to_string(next.pes_) + ")");
  next.weights_ = previous.weights_;
  next.chunk_history_ = previous.chunk_history_;
  next.step_history_ = previous.step_history_;
  next.update_index_ = previous.update_index_;
  for (std::uint32_t q = 0; q < next.pes_; ++q)
    next.stats_[q].timestep_wap = previous.stats_[q].timestep_wap;
}

}  // namespace dls
