#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace sprinkle {

/// Pairwise (cascade) summation. The reduction tree depends only on the
/// length, so results are reproducible irrespective of how the terms were
/// produced.
double pairwise_sum(std::span<const double> xs);
std::complex<double> pairwise_sum(std::span<const std::complex<double>> xs);

struct Estimate {
  double mean = 0.0;
  double se = 0.0; ///< standard error of the mean
  std::size_t count = 0;
};

Estimate mean_se(std::span<const double> xs);

struct ComplexEstimate {
  std::complex<double> mean;
  double se_real = 0.0;
  double se_imag = 0.0;
  std::size_t count = 0;
};

ComplexEstimate mean_se(std::span<const std::complex<double>> xs);

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = hardware
/// concurrency). Each index is processed exactly once; callers write results
/// into per-index slots so the outcome is independent of scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  unsigned threads = 0);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_two_sample(std::vector<double> a, std::vector<double> b);
/// Asymptotic critical value of the two-sample KS statistic at level alpha.
double ks_two_sample_critical(std::size_t n, std::size_t m, double alpha);

/// One-sample KS distance to N(mean, sd^2).
double ks_normal(std::vector<double> xs, double mean, double sd);

/// Anderson-Darling A^2 for normality with mean and variance estimated from
/// the data, including the small-sample factor (1 + 0.75/n + 2.25/n^2).
double anderson_darling_normal(std::vector<double> xs);
/// 1% critical value for the estimated-parameter case.
inline constexpr double kAndersonDarlingCritical1pct = 1.035;

double normal_cdf(double x);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Pearson correlation.
double correlation(std::span<const double> a, std::span<const double> b);

} // namespace sprinkle
