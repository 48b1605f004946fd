#include "sprinkle/levy.hpp"

#include "format.hpp"
#include "sprinkle/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace sprinkle {

std::string to_string(LevyKind kind)
{
  switch (kind) {
  case LevyKind::Poisson:
    return "poisson";
  case LevyKind::CompoundPoisson:
    return "compound_poisson";
  case LevyKind::Gamma:
    return "gamma";
  }
  return "unknown";
}

LevyKind levy_kind_from_string(const std::string& name)
{
  if (name == "poisson")
    return LevyKind::Poisson;
  if (name == "compound_poisson")
    return LevyKind::CompoundPoisson;
  if (name == "gamma")
    return LevyKind::Gamma;
  throw ValidationError("unknown measure kind '" + name + "'");
}

LevySpec LevySpec::poisson(double a)
{
  LevySpec s;
  s.kind = LevyKind::Poisson;
  s.a = a;
  return s;
}

LevySpec LevySpec::compound_poisson(std::vector<Jump> jumps, double a)
{
  LevySpec s;
  s.kind = LevyKind::CompoundPoisson;
  s.jumps = std::move(jumps);
  s.a = a;
  double m2 = 0.0;
  for (const auto& j : s.jumps)
    m2 += j.probability * j.size * j.size;
  if (!(m2 > 0.0))
    throw ValidationError("compound Poisson jump law must have positive second moment");
  s.rate = 1.0 / m2;
  return s;
}

LevySpec LevySpec::gamma(double a)
{
  LevySpec s;
  s.kind = LevyKind::Gamma;
  s.a = a;
  return s;
}

double LevySpec::moment(int order) const
{
  switch (kind) {
  case LevyKind::Poisson:
    return 1.0;
  case LevyKind::CompoundPoisson: {
    double acc = 0.0;
    for (const auto& j : jumps)
      acc += j.probability * std::pow(j.size, order);
    return rate * acc;
  }
  case LevyKind::Gamma:
    // int s^k s^{-1} e^{-s} ds = Gamma(k)
    return std::tgamma(static_cast<double>(order));
  }
  return 0.0;
}

double LevySpec::max_jump() const
{
  if (kind == LevyKind::CompoundPoisson) {
    double m = 0.0;
    for (const auto& j : jumps)
      m = std::max(m, j.size);
    return m;
  }
  return 1.0;
}

void LevySpec::validate() const
{
  if (!(a > 0.0) || !std::isfinite(a))
    throw ValidationError("exponential-moment radius a must be positive");
  if (kind == LevyKind::CompoundPoisson) {
    if (jumps.empty())
      throw ValidationError("compound Poisson needs at least one jump size");
    double total = 0.0;
    for (const auto& j : jumps) {
      if (!(j.size > 0.0) || !(j.probability > 0.0))
        throw ValidationError("jump sizes and probabilities must be positive");
      total += j.probability;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw ValidationError("jump probabilities must sum to 1");
    if (!(rate > 0.0))
      throw ValidationError("compound Poisson rate must be positive");
  }
  if (kind == LevyKind::Gamma && !(a < 1.0))
    throw ValidationError("Gamma Levy measure has int s e^{as} dLambda < inf only for a < 1");
  const double m1 = moment(1);
  if (!(m1 > 0.0) || m1 > 1.0 + 1e-12)
    throw ValidationError("first moment of the Levy measure must lie in (0, 1] so the Lebesgue "
                          "component is nonnegative");
  if (std::abs(moment(2) - 1.0) > 1e-12)
    throw ValidationError("second moment of the Levy measure must equal 1");
}

namespace {

// 1 - z - e^{-z}, accurate near 0.
cplx poisson_phi(cplx z)
{
  if (std::abs(z) < 0.2) {
    // -sum_{k>=2} (-z)^k / k!
    cplx term = 1.0;
    cplx acc = 0.0;
    for (int k = 1; k <= 24; ++k) {
      term *= -z / static_cast<double>(k);
      if (k >= 2)
        acc -= term;
    }
    return acc;
  }
  return 1.0 - z - std::exp(-z);
}

// log(1 + z) - z, accurate near 0.
cplx gamma_phi(cplx z)
{
  if (std::abs(z) < 0.2) {
    cplx power = z;
    cplx acc = 0.0;
    for (int k = 2; k <= 40; ++k) {
      power *= z;
      acc += (k % 2 == 0 ? -1.0 : 1.0) * power / static_cast<double>(k);
    }
    return acc;
  }
  return std::log(1.0 + z) - z;
}

} // namespace

cplx phi_eval(const LevySpec& spec, cplx z)
{
  if (!(z.real() > -spec.a))
    throw DomainError("Phi evaluated outside its analyticity domain Re z > -a");
  switch (spec.kind) {
  case LevyKind::Poisson:
    return poisson_phi(z);
  case LevyKind::CompoundPoisson: {
    cplx acc = 0.0;
    for (const auto& j : spec.jumps)
      acc += j.probability * poisson_phi(j.size * z);
    return spec.rate * acc;
  }
  case LevyKind::Gamma:
    return gamma_phi(z);
  }
  return 0.0;
}

double phi_derivative(const LevySpec& spec, int order)
{
  if (order < 1)
    throw ValidationError("derivative order must be >= 1");
  if (order == 1)
    return 0.0;
  const double sign = (order % 2 == 0) ? -1.0 : 1.0;
  return sign * spec.moment(order);
}

double SampledMeasure::total_mass() const
{
  double acc = lebesgue * grid.length();
  for (const auto& a : atoms)
    acc += a.weight;
  return acc;
}

double SampledMeasure::deposited_mass() const
{
  return std::accumulate(cell_density.begin(), cell_density.end(), 0.0) * grid.dx();
}

double SampledMeasure::mass_in(double lo, double hi) const
{
  const double L = grid.length();
  const double len = hi - lo;
  double acc = lebesgue * len;
  for (const auto& a : atoms) {
    // Shift the atom into [lo, lo + L).
    double offset = std::fmod(a.position - lo, L);
    if (offset < 0.0)
      offset += L;
    if (offset < len)
      acc += a.weight;
  }
  return acc;
}

double SampledMeasure::integrate_cellwise(const RealField& f) const
{
  double acc = 0.0;
  for (double v : f.values)
    acc += v;
  acc *= lebesgue * grid.dx();
  for (const auto& a : atoms)
    acc += a.weight * f.values[static_cast<std::size_t>(grid.cell_of(a.position))];
  return acc;
}

std::vector<double> deposit(const Grid& grid, double lebesgue, const std::vector<Atom>& atoms)
{
  const int M = grid.size();
  const double dx = grid.dx();
  const double half = 0.5 * grid.length();
  std::vector<double> density(static_cast<std::size_t>(M), lebesgue);
  for (const auto& a : atoms) {
    const double u = (grid.wrap(a.position) + half) / dx;
    int j = static_cast<int>(std::floor(u));
    double frac = u - j;
    if (j >= M) {
      j = M - 1;
      frac = 1.0;
    }
    const int next = (j + 1) % M;
    density[j] += a.weight * (1.0 - frac) / dx;
    density[next] += a.weight * frac / dx;
  }
  return density;
}

SampledMeasure make_measure(const Grid& grid, double epsilon, double lebesgue,
                            std::vector<Atom> atoms)
{
  if (!(lebesgue >= 0.0))
    throw ValidationError("Lebesgue density must be nonnegative");
  SampledMeasure m;
  m.grid = grid;
  m.epsilon = epsilon;
  m.lebesgue = lebesgue;
  m.atoms = std::move(atoms);
  for (const auto& a : m.atoms)
    if (!(a.weight > 0.0))
      throw ValidationError("atom weights must be positive");
  m.cell_density = deposit(grid, lebesgue, m.atoms);
  return m;
}

SampledMeasure lebesgue_measure(const Grid& grid) { return make_measure(grid, 1.0, 1.0, {}); }

SampledMeasure sample(const LevySpec& spec, double epsilon, const Grid& grid, Rng& rng)
{
  spec.validate();
  if (!(epsilon > 0.0) || epsilon > 1.0)
    throw ValidationError("epsilon must lie in (0, 1]");

  const double L = grid.length();
  std::vector<Atom> atoms;
  double lebesgue = spec.lebesgue_density();
  if (lebesgue < 0.0)
    lebesgue = 0.0;

  if (spec.kind == LevyKind::Gamma) {
    const double dx = grid.dx();
    std::gamma_distribution<double> cell_mass(dx / epsilon, epsilon);
    atoms.reserve(static_cast<std::size_t>(grid.size()));
    for (int j = 0; j < grid.size(); ++j) {
      const double w = cell_mass(rng);
      if (w > 0.0)
        atoms.push_back({grid.x(j) + 0.5 * dx, w});
    }
    lebesgue = 0.0;
  } else {
    const double intensity = (spec.kind == LevyKind::Poisson ? 1.0 : spec.rate) / epsilon;
    std::poisson_distribution<long> count(intensity * L);
    std::uniform_real_distribution<double> position(-0.5 * L, 0.5 * L);
    const long n = count(rng);
    atoms.reserve(static_cast<std::size_t>(n));
    if (spec.kind == LevyKind::Poisson) {
      for (long i = 0; i < n; ++i)
        atoms.push_back({position(rng), epsilon});
    } else {
      std::vector<double> probs;
      for (const auto& j : spec.jumps)
        probs.push_back(j.probability);
      std::discrete_distribution<int> which(probs.begin(), probs.end());
      for (long i = 0; i < n; ++i) {
        const double x = position(rng);
        const double s = spec.jumps[static_cast<std::size_t>(which(rng))].size;
        atoms.push_back({x, epsilon * s});
      }
    }
  }
  return make_measure(grid, epsilon, lebesgue, std::move(atoms));
}

double laplace_functional_exact(const LevySpec& spec, double epsilon, const RealField& f)
{
  double acc = 0.0;
  for (double v : f.values) {
    if (!(epsilon * v > -spec.a))
      throw DomainError("Laplace functional needs f > -a/epsilon pointwise");
    acc += phi_eval(spec, epsilon * v).real() + epsilon * v;
  }
  return std::exp(-acc * f.grid.dx() / epsilon);
}

cplx characteristic_functional_exact(const LevySpec& spec, double epsilon, const RealField& F,
                                     double theta)
{
  const double root = std::sqrt(epsilon);
  cplx acc = 0.0;
  for (double v : F.values)
    acc += phi_eval(spec, cplx(0.0, -theta * root * v));
  return std::exp(-acc * F.grid.dx() / epsilon);
}

double characteristic_functional_limit(const RealField& F, double theta)
{
  const double n = l2_norm(F);
  return std::exp(-0.5 * theta * theta * n * n);
}

double MollifiedMeasure::total_mass() const
{
  return std::accumulate(density.begin(), density.end(), 0.0) * base.grid.dx();
}

MollifiedMeasure mollify(const SampledMeasure& measure, double h)
{
  const Grid& grid = measure.grid;
  if (!(h > 0.0) || h > 1.0)
    throw ValidationError("mollification scale h must lie in (0, 1]");
  if (h < 2.0 * grid.dx() * (1.0 - 1e-12))
    throw ResolutionError("mollification scale h must be at least 2 dx");
  if (2.0 * h > grid.length())
    throw ResolutionError("mollification kernel wider than the torus");

  MollifiedMeasure out;
  out.base = measure;
  out.h = h;
  out.density.assign(static_cast<std::size_t>(grid.size()), measure.lebesgue);

  const double dx = grid.dx();
  const int M = grid.size();
  const int reach = static_cast<int>(std::ceil(h / dx)) + 1;
  std::vector<double> kernel(static_cast<std::size_t>(2 * reach + 1));
  for (const auto& a : measure.atoms) {
    const double x = grid.wrap(a.position);
    const int centre = grid.cell_of(x);
    double norm = 0.0;
    for (int o = -reach; o <= reach; ++o) {
      const int j = ((centre + o) % M + M) % M;
      const double d = grid.wrap(grid.x(j) - x);
      const double k = bump(d / h) / h;
      kernel[static_cast<std::size_t>(o + reach)] = k;
      norm += k;
    }
    norm *= dx;
    for (int o = -reach; o <= reach; ++o) {
      const int j = ((centre + o) % M + M) % M;
      out.density[static_cast<std::size_t>(j)] +=
          a.weight * kernel[static_cast<std::size_t>(o + reach)] / norm;
    }
  }
  return out;
}

void write_csv(std::ostream& os, const SampledMeasure& measure)
{
  using detail::shortest;
  os << "# c=" << shortest(measure.lebesgue) << ",epsilon=" << shortest(measure.epsilon)
     << ",L=" << shortest(measure.grid.length()) << '\n';
  os << "position,weight\n";
  for (const auto& a : measure.atoms)
    os << shortest(a.position) << ',' << shortest(a.weight) << '\n';
}

} // namespace sprinkle
