#include "sprinkle/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace sprinkle {

namespace {

template <class T>
T pairwise(std::span<const T> xs)
{
  if (xs.size() <= 8) {
    T acc{};
    for (const auto& v : xs)
      acc += v;
    return acc;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise(xs.first(half)) + pairwise(xs.subspan(half));
}

} // namespace

double pairwise_sum(std::span<const double> xs) { return pairwise(xs); }

std::complex<double> pairwise_sum(std::span<const std::complex<double>> xs)
{
  return pairwise(xs);
}

Estimate mean_se(std::span<const double> xs)
{
  Estimate e;
  e.count = xs.size();
  if (xs.empty())
    return e;
  const double n = static_cast<double>(xs.size());
  e.mean = pairwise_sum(xs) / n;
  if (xs.size() > 1) {
    std::vector<double> sq(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
      sq[i] = (xs[i] - e.mean) * (xs[i] - e.mean);
    e.se = std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
  }
  return e;
}

ComplexEstimate mean_se(std::span<const std::complex<double>> xs)
{
  std::vector<double> re(xs.size()), im(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    re[i] = xs[i].real();
    im[i] = xs[i].imag();
  }
  const Estimate r = mean_se(re);
  const Estimate i = mean_se(im);
  return {{r.mean, i.mean}, r.se, i.se, xs.size()};
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  unsigned threads)
{
  if (threads == 0)
    threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i)
      body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count)
          return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure)
            failure = std::current_exception();
          next = count;
          return;
        }
      }
    });
  }
  for (auto& th : pool)
    th.join();
  if (failure)
    std::rethrow_exception(failure);
}

double ks_two_sample(std::vector<double> a, std::vector<double> b)
{
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x)
      ++i;
    while (j < b.size() && b[j] <= x)
      ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

double ks_two_sample_critical(std::size_t n, std::size_t m, double alpha)
{
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_normal(std::vector<double> xs, double mean, double sd)
{
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = normal_cdf((xs[i] - mean) / sd);
    d = std::max({d, (i + 1) / n - F, F - i / n});
  }
  return d;
}

double anderson_darling_normal(std::vector<double> xs)
{
  const std::size_t n = xs.size();
  const Estimate e = mean_se(xs);
  const double sd = e.se * std::sqrt(static_cast<double>(n));
  std::sort(xs.begin(), xs.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double zi = normal_cdf((xs[i] - e.mean) / sd);
    const double zr = normal_cdf((xs[n - 1 - i] - e.mean) / sd);
    const double lo = std::max(zi, 1e-300);
    const double hi = std::max(1.0 - zr, 1e-300);
    acc += (2.0 * static_cast<double>(i) + 1.0) * (std::log(lo) + std::log(hi));
  }
  const double nd = static_cast<double>(n);
  const double a2 = -nd - acc / nd;
  return a2 * (1.0 + 0.75 / nd + 2.25 / (nd * nd));
}

LineFit fit_line(std::span<const double> x, std::span<const double> y)
{
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += r * r;
    }
    fit.slope_se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

double correlation(std::span<const double> a, std::span<const double> b)
{
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

} // namespace sprinkle
