#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sprinkle/rng.hpp"
#include "sprinkle/stats.hpp"

#include <atomic>
#include <cmath>
#include <random>
#include <stdexcept>

using namespace sprinkle;

TEST_CASE("pairwise summation")
{
  std::vector<double> xs(1000, 0.1);
  CHECK(pairwise_sum(xs) == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
  std::vector<std::complex<double>> zs(10, {1.0, -2.0});
  CHECK(pairwise_sum(zs) == std::complex<double>(10.0, -20.0));
}

TEST_CASE("mean and standard error")
{
  const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
  const Estimate e = mean_se(xs);
  CHECK(e.mean == 2.5);
  CHECK(e.se == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(e.count == 4);
}

TEST_CASE("parallel_for visits every index once and propagates errors")
{
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; }, 4);
  for (auto& h : hits)
    CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(
                      10, [](std::size_t i) {
                        if (i == 7)
                          throw std::runtime_error("boom");
                      },
                      3),
                  std::runtime_error);
}

TEST_CASE("sub-seeds are distinct and stable")
{
  CHECK(sub_seed(1, 0) != sub_seed(1, 1));
  CHECK(sub_seed(1, 0) != sub_seed(2, 0));
  CHECK(sub_seed(1, 0, 0) != sub_seed(1, 0, 1));
  CHECK(sub_seed(123, 45, 6) == sub_seed(123, 45, 6));
}

TEST_CASE("normality tests")
{
  Rng rng(1);
  std::normal_distribution<double> n(3.0, 2.0);
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> gauss(5000), skew(5000);
  for (auto& v : gauss)
    v = n(rng);
  for (auto& v : skew)
    v = ex(rng);
  CHECK(anderson_darling_normal(gauss) < kAndersonDarlingCritical1pct);
  CHECK(anderson_darling_normal(skew) > kAndersonDarlingCritical1pct);
  CHECK(ks_normal(gauss, 3.0, 2.0) < 1.63 / std::sqrt(5000.0));
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
}

TEST_CASE("two-sample Kolmogorov-Smirnov")
{
  Rng rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> a(4000), b(4000), c(4000);
  for (auto& v : a)
    v = n(rng);
  for (auto& v : b)
    v = n(rng);
  for (auto& v : c)
    v = n(rng) + 0.3;
  const double crit = ks_two_sample_critical(4000, 4000, 0.01);
  CHECK(crit == doctest::Approx(1.6276 * std::sqrt(2.0 / 4000.0)).epsilon(1e-3));
  CHECK(ks_two_sample(a, b) < crit);
  CHECK(ks_two_sample(a, c) > crit);
  CHECK(ks_two_sample({1.0, 2.0}, {1.0, 2.0}) == 0.0);
}

TEST_CASE("line fit and correlation")
{
  const std::vector<double> x = {0.0, 1.0, 2.0, 3.0};
  const std::vector<double> y = {1.0, 3.0, 5.0, 7.0};
  const LineFit f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.slope_se == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(correlation(x, y) == doctest::Approx(1.0));
}
