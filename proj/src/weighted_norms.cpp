#include "sprinkle/weighted_norms.hpp"
#include "sprinkle/errors.hpp"

#include <algorithm>
#include <cmath>

namespace sprinkle {

namespace {

int integer_length(const Grid& grid)
{
  const double L = grid.length();
  if (std::abs(L - std::round(L)) > 1e-12 || std::round(L) < 2.0)
    throw ValidationError("weighted norms need an integer domain length >= 2");
  return static_cast<int>(std::round(L));
}

int torus_index(int k, int first, int n) { return ((k - first) % n + n) % n; }

} // namespace

double WeightSequence::at(int k) const
{
  return values[static_cast<std::size_t>(torus_index(k, first, size()))];
}

double EnvelopeWeight::envelope_squared_at(int k) const
{
  return envelope_squared[static_cast<std::size_t>(torus_index(k, source.first, source.size()))];
}

WeightSequence zero_sequence(const Grid& grid)
{
  const int n = integer_length(grid);
  return {-(n / 2), std::vector<double>(static_cast<std::size_t>(n), 0.0)};
}

EnvelopeWeight envelope(const WeightSequence& Z, const Grid& grid)
{
  const int n = integer_length(grid);
  if (Z.size() != n)
    throw ValidationError("weight sequence must have one entry per unit cell of the torus");
  for (double v : Z.values)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ValidationError("weight sequence entries must be finite and nonnegative");

  EnvelopeWeight env;
  env.source = Z;
  env.envelope_squared.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double best = 0.0; // l = k term is Z(k)^2 >= 0
    for (int l = 0; l < n; ++l) {
      const int d = std::abs(i - l);
      const int dist = std::min(d, n - d);
      best = std::max(best, Z.values[l] * Z.values[l] - dist);
    }
    env.envelope_squared[i] = 4.0 + best;
  }

  env.weight = RealField(grid);
  for (int j = 0; j < grid.size(); ++j) {
    const double x = grid.x(j);
    const double k = std::floor(x);
    const double frac = x - k;
    const int ki = static_cast<int>(k);
    env.weight.values[j] =
        (1.0 - frac) * env.envelope_squared_at(ki) + frac * env.envelope_squared_at(ki + 1);
  }
  return env;
}

double weighted_l2_norm(const GridField& f, const EnvelopeWeight& env)
{
  double acc = 0.0;
  for (std::size_t j = 0; j < f.values.size(); ++j)
    acc += std::norm(f.values[j]) * env.weight.values[j];
  return std::sqrt(acc * f.grid.dx());
}

double weighted_l2_norm(const GridField& f, const WeightSequence& Z)
{
  return weighted_l2_norm(f, envelope(Z, f.grid));
}

WeightSequence cell_masses(const SampledMeasure& mu)
{
  WeightSequence Z = zero_sequence(mu.grid);
  for (int i = 0; i < Z.size(); ++i) {
    const int k = Z.first + i;
    Z.values[i] = mu.mass_in(k - 0.5, k + 0.5);
  }
  return Z;
}

WeightSequence fluctuation_weights(const Grid& grid, const std::vector<double>& density,
                                   double epsilon, double s)
{
  WeightSequence Z = zero_sequence(grid);
  const double scale = 1.0 / std::sqrt(epsilon);
  for (int i = 0; i < Z.size(); ++i) {
    const RealField rho = partition_bump(Z.first + i, grid);
    GridField g(grid);
    for (int j = 0; j < grid.size(); ++j)
      g.values[j] = rho.values[j] * (density[j] - 1.0) * scale;
    Z.values[i] = sobolev_norm(g, -s);
  }
  return Z;
}

WeightSequence fluctuation_weights(const SampledMeasure& mu, double s)
{
  return fluctuation_weights(mu.grid, mu.cell_density, mu.epsilon, s);
}

double xn1_norm(const GridField& f, const SampledMeasure& mu)
{
  const double h1 = sobolev_norm(f, 1.0);
  const double w = weighted_l2_norm(f, cell_masses(mu));
  return std::sqrt(h1 * h1 + w * w);
}

double yns1_norm(const GridField& f, const SampledMeasure& mu, double s)
{
  if (!(s > 0.5) || s > 1.0)
    throw ValidationError("Y^1_{n,s} norm needs 1/2 < s <= 1");
  const double x = xn1_norm(f, mu);
  const double w = weighted_l2_norm(f, fluctuation_weights(mu, s));
  return std::sqrt(x * x + w * w);
}

} // namespace sprinkle
