#pragma once

#include <span>
#include <vector>

namespace dls::metrics {

/// Coefficient of variation of PE finishing times: population standard
/// deviation over the mean. Throws undefined-metric on empty input or zero
/// mean.
double cov(std::span<const double> finish_times);

/// Mean finishing time over the maximum. 1 means perfectly balanced.
double mean_max(std::span<const double> finish_times);

/// 100 * (baseline - measured) / baseline; negative means degradation.
double percent_improvement(double baseline, double measured);

inline constexpr double kSevereCovThreshold = 0.1;

bool severe_imbalance(double cov_value, double threshold = kSevereCovThreshold) noexcept;

struct ImbalanceReport {
  double cov = 0.0;
  double mean_max = 1.0;
  double max_finish = 0.0;
  std::vector<double> finish_times;
};

ImbalanceReport imbalance_report(std::span<const double> finish_times);

}  // namespace dls::metrics
