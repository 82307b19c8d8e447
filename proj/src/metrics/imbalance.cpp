#include "metrics/imbalance.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace dls::metrics {

namespace {

void check_finite(std::span<const double> xs) {
  if (xs.empty()) throw Error(Errc::undefined_metric, "no finishing times");
  for (double x : xs)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw Error(Errc::undefined_metric, "finishing times must be finite and non-negative");
}

double mean_of(std::span<const double> xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

}  // namespace

double cov(std::span<const double> finish_times) {
  check_finite(finish_times);
  const double mean = mean_of(finish_times);
  if (mean <= 0.0) throw Error(Errc::undefined_metric, "c.o.v. undefined for zero mean");
  double ss = 0.0;
  for (double x : finish_times) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(finish_times.size())) / mean;
}

double mean_max(std::span<const double> finish_times) {
  check_finite(finish_times);
  const double max = *std::max_element(finish_times.begin(), finish_times.end());
  if (max <= 0.0) throw Error(Errc::undefined_metric, "mean/max undefined for zero maximum");
  return mean_of(finish_times) / max;
}

double percent_improvement(double baseline, double measured) {
  if (!(baseline > 0.0)) throw Error(Errc::invalid_argument, "baseline time must be positive");
  return 100.0 * (baseline - measured) / baseline;
}

bool severe_imbalance(double cov_value, double threshold) noexcept { return cov_value > threshold; }

ImbalanceReport imbalance_report(std::span<const double> finish_times) {
  ImbalanceReport r;
  r.cov = cov(finish_times);
  r.mean_max = mean_max(finish_times);
  r.max_finish = *std::max_element(finish_times.begin(), finish_times.end());
  r.finish_times.assign(finish_times.begin(), finish_times.end());
  return r;
}

}  // namespace dls::metrics
