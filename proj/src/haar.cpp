#include "sprinkle/haar.hpp"
#include "sprinkle/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace sprinkle {

double HaarIndex::support_lo() const noexcept
{
  return static_cast<double>(N == 1 ? k : 2 * k) / N;
}

double HaarIndex::support_hi() const noexcept
{
  return static_cast<double>(N == 1 ? k + 1 : 2 * k + 2) / N;
}

double HaarIndex::value(double x) const noexcept
{
  const double cell = std::floor(x * N);
  if (N == 1)
    return cell == k ? 1.0 : 0.0;
  const double amp = std::sqrt(0.5 * N);
  if (cell == 2.0 * k)
    return amp;
  if (cell == 2.0 * k + 1.0)
    return -amp;
  return 0.0;
}

double HaarIndex::integral() const noexcept { return N == 1 ? 1.0 : 0.0; }

namespace {

void check_index(const HaarIndex& idx)
{
  if (idx.N < 1 || (idx.N & (idx.N - 1)) != 0)
    throw ValidationError("Haar scale N must be a power of two");
}

void check_inside(const HaarIndex& idx, const Grid& grid)
{
  const double half = 0.5 * grid.length();
  if (idx.support_lo() < -half || idx.support_hi() > half)
    throw ValidationError("Haar interval must lie inside the torus");
}

} // namespace

RealField haar_function(const HaarIndex& idx, const Grid& grid)
{
  check_index(idx);
  check_inside(idx, grid);
  if (1.0 / idx.N < 2.0 * grid.dx() * (1.0 - 1e-12))
    throw ResolutionError("Haar function not resolved: need 1/N >= 2 dx");
  RealField e(grid);
  for (int j = 0; j < grid.size(); ++j)
    e.values[j] = idx.value(grid.x(j) + 0.5 * grid.dx());
  return e;
}

HaarCoefficient haar_coefficient(const SampledMeasure& mu, const HaarIndex& idx)
{
  check_index(idx);
  check_inside(idx, mu.grid);
  const double lo = idx.support_lo();
  const double hi = idx.support_hi();
  double acc = 0.0;
  for (const auto& a : mu.atoms) {
    const double x = mu.grid.wrap(a.position);
    if (x >= lo && x < hi)
      acc += a.weight * idx.value(x);
  }
  acc += (mu.lebesgue - 1.0) * idx.integral();
  return {idx, acc};
}

double haar_product_integral(const std::vector<HaarIndex>& indices)
{
  if (indices.empty())
    return 0.0;
  int finest = 1;
  double lo = -1e300, hi = 1e300;
  for (const auto& idx : indices) {
    check_index(idx);
    finest = std::max(finest, idx.N);
    lo = std::max(lo, idx.support_lo());
    hi = std::min(hi, idx.support_hi());
  }
  if (!(lo < hi))
    return 0.0;
  // Every factor is constant on the intervals of the finest lattice.
  const long first = std::lround(lo * finest);
  const long last = std::lround(hi * finest);
  double acc = 0.0;
  for (long m = first; m < last; ++m) {
    const double mid = (static_cast<double>(m) + 0.5) / finest;
    double prod = 1.0;
    for (const auto& idx : indices)
      prod *= idx.value(mid);
    acc += prod;
  }
  return acc / finest;
}

double exact_joint_cumulant(const LevySpec& spec, double epsilon,
                            const std::vector<HaarIndex>& indices)
{
  const int J = static_cast<int>(indices.size());
  if (J < 1)
    throw ValidationError("joint cumulant needs at least one index");
  return std::pow(-epsilon, J - 1) * phi_derivative(spec, J) * haar_product_integral(indices);
}

namespace {

using Partition = std::vector<unsigned>; // blocks as bitmasks

void enumerate_partitions(int n, int next, Partition& current, std::vector<Partition>& out)
{
  if (next == n) {
    out.push_back(current);
    return;
  }
  const unsigned bit = 1u << next;
  // Index loop: the recursion may reallocate `current`.
  for (std::size_t b = 0; b < current.size(); ++b) {
    current[b] |= bit;
    enumerate_partitions(n, next + 1, current, out);
    current[b] &= ~bit;
  }
  current.push_back(bit);
  enumerate_partitions(n, next + 1, current, out);
  current.pop_back();
}

double cumulant_from_moments(const std::vector<double>& moments,
                             const std::vector<Partition>& partitions)
{
  static const double factorial[] = {1.0, 1.0, 2.0, 6.0, 24.0};
  double acc = 0.0;
  for (const auto& p : partitions) {
    const std::size_t b = p.size();
    double term = ((b - 1) % 2 == 0 ? 1.0 : -1.0) * factorial[b - 1];
    for (unsigned block : p)
      term *= moments[block];
    acc += term;
  }
  return acc;
}

} // namespace

Estimate joint_cumulant_estimate(const std::vector<double>& samples, int width, int groups)
{
  if (width < 1 || width > 4)
    throw ValidationError("joint cumulants are estimated up to order 4");
  const std::size_t n = samples.size() / static_cast<std::size_t>(width);
  if (n < 2)
    throw ValidationError("need at least two samples");
  groups = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(groups), n));

  std::vector<Partition> partitions;
  Partition scratch;
  enumerate_partitions(width, 0, scratch, partitions);

  const unsigned subsets = 1u << width;
  // Per-group sums of prod_{i in B} X_i for each subset B.
  std::vector<std::vector<double>> group_sums(static_cast<std::size_t>(groups),
                                              std::vector<double>(subsets, 0.0));
  std::vector<std::size_t> group_count(static_cast<std::size_t>(groups), 0);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t g = r * static_cast<std::size_t>(groups) / n;
    const double* row = &samples[r * static_cast<std::size_t>(width)];
    auto& sums = group_sums[g];
    for (unsigned B = 1; B < subsets; ++B) {
      double prod = 1.0;
      for (int i = 0; i < width; ++i)
        if (B & (1u << i))
          prod *= row[i];
      sums[B] += prod;
    }
    ++group_count[g];
  }
  std::vector<double> total(subsets, 0.0);
  for (unsigned B = 1; B < subsets; ++B) {
    std::vector<double> column(static_cast<std::size_t>(groups));
    for (int g = 0; g < groups; ++g)
      column[static_cast<std::size_t>(g)] = group_sums[static_cast<std::size_t>(g)][B];
    total[B] = pairwise_sum(column);
  }

  auto estimate_from = [&](const std::vector<double>& sums, double count) {
    std::vector<double> moments(subsets, 1.0);
    for (unsigned B = 1; B < subsets; ++B)
      moments[B] = sums[B] / count;
    return cumulant_from_moments(moments, partitions);
  };

  const double full = estimate_from(total, static_cast<double>(n));
  std::vector<double> leave_out(static_cast<std::size_t>(groups));
  for (int g = 0; g < groups; ++g) {
    std::vector<double> sums(subsets, 0.0);
    for (unsigned B = 1; B < subsets; ++B)
      sums[B] = total[B] - group_sums[static_cast<std::size_t>(g)][B];
    leave_out[static_cast<std::size_t>(g)] = estimate_from(
        sums, static_cast<double>(n - group_count[static_cast<std::size_t>(g)]));
  }
  const double G = static_cast<double>(groups);
  const double mean_lo = pairwise_sum(leave_out) / G;
  double var = 0.0;
  for (double v : leave_out)
    var += (v - mean_lo) * (v - mean_lo);

  Estimate e;
  e.count = n;
  e.mean = G * full - (G - 1.0) * mean_lo;
  e.se = std::sqrt((G - 1.0) / G * var);
  return e;
}

std::vector<double> sample_haar_coefficients(const LevySpec& spec, double epsilon,
                                             const std::vector<HaarIndex>& indices,
                                             const Grid& grid, std::size_t replicas,
                                             std::uint64_t seed)
{
  for (const auto& idx : indices) {
    check_index(idx);
    check_inside(idx, grid);
  }
  const std::size_t width = indices.size();
  std::vector<double> out(replicas * width);
  parallel_for(replicas, [&](std::size_t r) {
    Rng rng = make_rng(seed, r);
    const SampledMeasure mu = sample(spec, epsilon, grid, rng);
    for (std::size_t i = 0; i < width; ++i)
      out[r * width + i] = haar_coefficient(mu, indices[i]).value;
  });
  return out;
}

CumulantReport empirical_cumulants(const LevySpec& spec, double epsilon,
                                   const std::vector<HaarIndex>& indices, const Grid& grid,
                                   std::size_t replicas, std::uint64_t seed)
{
  if (replicas < 100)
    throw ValidationError("empirical cumulants need at least 100 replicas");
  const auto samples = sample_haar_coefficients(spec, epsilon, indices, grid, replicas, seed);
  CumulantReport report;
  report.indices = indices;
  report.exact = exact_joint_cumulant(spec, epsilon, indices);
  report.estimate = joint_cumulant_estimate(samples, static_cast<int>(indices.size()));
  return report;
}

Estimate weighted_negative_norm_moment(const LevySpec& spec, double epsilon, const GridField& psi,
                                       double s, int p, std::size_t replicas, std::uint64_t seed)
{
  if (!(s > 0.5))
    throw ValidationError("negative-norm moments need s > 1/2");
  if (p != 1 && p != 2)
    throw ValidationError("moment order p must be 1 or 2");
  const Grid& grid = psi.grid;
  std::vector<double> values(replicas);
  parallel_for(replicas, [&](std::size_t r) {
    Rng rng = make_rng(seed, r);
    const SampledMeasure mu = sample(spec, epsilon, grid, rng);
    GridField g(grid);
    for (int j = 0; j < grid.size(); ++j)
      g.values[j] = psi.values[j] * (mu.cell_density[j] - 1.0);
    const double n = sobolev_norm(g, -s);
    values[r] = std::pow(n * n, p);
  });
  return mean_se(values);
}

} // namespace sprinkle
