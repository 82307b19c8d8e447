#include "doctest.h"

#include <random>
#include <vector>

#include "core/error.hpp"
#include "metrics/imbalance.hpp"

using namespace dls;
using namespace dls::metrics;

TEST_CASE("cov and mean/max on small vectors") {
  const std::vector<double> flat{5, 5, 5, 5};
  CHECK(cov(flat) == 0.0);
  CHECK(mean_max(flat) == 1.0);

  // std of {2,4} is 1, mean 3, max 4
  const std::vector<double> two{2, 4};
  CHECK(cov(two) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(mean_max(two) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("metric errors") {
  const std::vector<double> none;
  const std::vector<double> zeros{0, 0};
  const std::vector<double> negative{1, -1};
  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc{};
  };
  CHECK(code_of([&] { cov(none); }) == Errc::undefined_metric);
  CHECK(code_of([&] { cov(zeros); }) == Errc::undefined_metric);
  CHECK(code_of([&] { mean_max(zeros); }) == Errc::undefined_metric);
  CHECK(code_of([&] { mean_max(negative); }) == Errc::undefined_metric);
  CHECK(code_of([&] { percent_improvement(0.0, 1.0); }) == Errc::invalid_argument);
}

TEST_CASE("percent improvement sign convention") {
  CHECK(percent_improvement(100, 79) == doctest::Approx(21.0));
  CHECK(percent_improvement(100, 100) == 0.0);
  CHECK(percent_improvement(100, 115) == doctest::Approx(-15.0));
}

TEST_CASE("property: percent improvement inverts the scaling") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> base(1e-3, 1e3), pct(-90, 90);
  for (int i = 0; i < 1000; ++i) {
    const double b = base(gen), x = pct(gen);
    CHECK(percent_improvement(b, b * (1 - x / 100)) == doctest::Approx(x).epsilon(1e-9));
  }
}

TEST_CASE("property: scale invariance and bounds") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> xs(1 + trial % 17);
    for (double& x : xs) x = u(gen);
    const double c = cov(xs), m = mean_max(xs);
    CHECK(c >= 0.0);
    CHECK(m > 0.0);
    CHECK(m <= 1.0);
    for (double lambda : {1e-6, 1.0, 1e6}) {
      std::vector<double> ys(xs);
      for (double& y : ys) y *= lambda;
      CHECK(cov(ys) == doctest::Approx(c).epsilon(1e-9));
      CHECK(mean_max(ys) == doctest::Approx(m).epsilon(1e-12));
    }
  }
}

TEST_CASE("property: balanced iff cov zero iff mean/max one") {
  std::vector<double> eq(9, 2.5);
  CHECK(cov(eq) == 0.0);
  CHECK(mean_max(eq) == 1.0);
  eq[4] = 2.5000001;
  CHECK(cov(eq) > 0.0);
  CHECK(mean_max(eq) < 1.0);
}

TEST_CASE("imbalance report") {
  const std::vector<double> t{1, 1, 1, 5};
  auto r = imbalance_report(t);
  CHECK(r.max_finish == 5.0);
  CHECK(r.mean_max == doctest::Approx(0.4));
  CHECK(severe_imbalance(r.cov));
  CHECK_FALSE(severe_imbalance(0.05));
  CHECK(severe_imbalance(0.05, 0.01));
  CHECK(r.finish_times == t);
}
