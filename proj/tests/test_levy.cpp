#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sprinkle/errors.hpp"
#include "sprinkle/levy.hpp"
#include "sprinkle/stats.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace sprinkle;

namespace {

std::vector<LevySpec> all_specs()
{
  return {LevySpec::poisson(), LevySpec::compound_poisson({{0.5, 0.5}, {1.5, 0.5}}),
          LevySpec::gamma()};
}

// Gauss-Legendre-free oracle: composite Simpson on s in (0, 60] after the
// substitution s = u^2 removes the 1/s endpoint behaviour.
double gamma_phi_quadrature(double z)
{
  const int n = 200000;
  const double umax = std::sqrt(60.0);
  const double h = umax / n;
  auto integrand = [z](double u) {
    if (u == 0.0)
      return 0.0;
    const double s = u * u;
    // (1 - s z - e^{-sz}) s^{-1} e^{-s} ds, ds = 2u du
    return (1.0 - s * z - std::exp(-s * z)) / s * std::exp(-s) * 2.0 * u;
  };
  double acc = integrand(0.0) + integrand(umax);
  for (int i = 1; i < n; ++i)
    acc += (i % 2 == 1 ? 4.0 : 2.0) * integrand(i * h);
  return acc * h / 3.0;
}

RealField indicator(const Grid& g, double lo, double hi, double value = 1.0)
{
  RealField f(g);
  for (int j = 0; j < g.size(); ++j) {
    const double mid = g.x(j) + 0.5 * g.dx();
    f[j] = (mid >= lo && mid < hi) ? value : 0.0;
  }
  return f;
}

} // namespace

TEST_CASE("spec factories and validation")
{
  const auto cp = LevySpec::compound_poisson({{0.5, 0.5}, {1.5, 0.5}});
  CHECK(cp.rate == doctest::Approx(0.8));
  CHECK(cp.moment(2) == doctest::Approx(1.0));
  CHECK(cp.lebesgue_density() == doctest::Approx(0.2));
  for (const auto& s : all_specs())
    CHECK_NOTHROW(s.validate());

  CHECK_THROWS_AS(LevySpec::gamma(1.5).validate(), ValidationError);
  CHECK_THROWS_AS(LevySpec::poisson(0.0).validate(), ValidationError);
  // m1 = rate * 2 > 1 when all jumps are small.
  CHECK_THROWS_AS(LevySpec::compound_poisson({{0.25, 1.0}}).validate(), ValidationError);
  LevySpec bad = cp;
  bad.rate = 0.7;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cp;
  bad.jumps[0].probability = 0.4;
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  CHECK(levy_kind_from_string(to_string(LevyKind::Gamma)) == LevyKind::Gamma);
  CHECK_THROWS_AS(levy_kind_from_string("stable"), ValidationError);
}

TEST_CASE("Phi closed forms")
{
  const auto poisson = LevySpec::poisson();
  CHECK(std::abs(phi_eval(poisson, 0.0)) == 0.0);
  CHECK(phi_eval(poisson, 1.0).real() == doctest::Approx(-std::exp(-1.0)).epsilon(1e-14));

  const auto gamma = LevySpec::gamma();
  CHECK(phi_eval(gamma, 1.0).real() == doctest::Approx(std::log(2.0) - 1.0).epsilon(1e-14));
  for (double z : {0.05, 0.3, 1.0, 2.5})
    CHECK(phi_eval(gamma, z).real() == doctest::Approx(gamma_phi_quadrature(z)).epsilon(1e-8));

  const auto cp = LevySpec::compound_poisson({{0.5, 0.5}, {1.5, 0.5}});
  const cplx z(0.3, -0.7);
  cplx expect = 0.0;
  for (double s : {0.5, 1.5})
    expect += 0.5 * (1.0 - s * z - std::exp(-s * z));
  CHECK(std::abs(phi_eval(cp, z) - 0.8 * expect) < 1e-14);

  // The small-argument series and the direct formula agree at the switch.
  for (double r : {0.199, 0.201})
    CHECK(std::abs(phi_eval(poisson, cplx(0.0, r)) - (1.0 - cplx(0.0, r) - std::exp(-cplx(0.0, r)))) <
          1e-15);

  CHECK_THROWS_AS(phi_eval(gamma, -0.6), DomainError);
  CHECK_THROWS_AS(phi_eval(poisson, -1.5), DomainError);
}

TEST_CASE("Phi normalization for every spec")
{
  for (const auto& s : all_specs()) {
    CHECK(std::abs(phi_eval(s, 0.0)) < 1e-15);
    CHECK(phi_derivative(s, 1) == 0.0);
    CHECK(phi_derivative(s, 2) == doctest::Approx(-1.0).epsilon(1e-10));
  }
  CHECK(phi_derivative(LevySpec::poisson(), 3) == doctest::Approx(1.0));
  CHECK(phi_derivative(LevySpec::poisson(), 4) == doctest::Approx(-1.0));
  CHECK(phi_derivative(LevySpec::gamma(), 3) == doctest::Approx(2.0));
  CHECK(phi_derivative(LevySpec::gamma(), 4) == doctest::Approx(-6.0));
  CHECK_THROWS_AS(phi_derivative(LevySpec::poisson(), 0), ValidationError);
}

TEST_CASE("Phi derivatives match finite differences")
{
  const double h = 1e-2;
  for (const auto& s : all_specs()) {
    auto P = [&](double z) { return phi_eval(s, z).real(); };
    const double d2 = (P(h) - 2 * P(0) + P(-h)) / (h * h);
    const double d3 = (P(2 * h) - 2 * P(h) + 2 * P(-h) - P(-2 * h)) / (2 * h * h * h);
    const double d4 = (P(2 * h) - 4 * P(h) + 6 * P(0) - 4 * P(-h) + P(-2 * h)) / std::pow(h, 4);
    CHECK(d2 == doctest::Approx(phi_derivative(s, 2)).epsilon(1e-3));
    CHECK(d3 == doctest::Approx(phi_derivative(s, 3)).epsilon(1e-3));
    CHECK(d4 == doctest::Approx(phi_derivative(s, 4)).epsilon(1e-2));
  }
}

TEST_CASE("deposition conserves mass")
{
  Grid g(8.0, 64);
  const auto mu = make_measure(g, 0.1, 0.3, {{-4.0, 0.2}, {3.99, 0.5}, {0.01, 1.0}, {7.0, 0.1}});
  CHECK(mu.deposited_mass() == doctest::Approx(mu.total_mass()).epsilon(1e-12));
  for (double d : mu.cell_density)
    CHECK(d >= 0.0);
  CHECK_THROWS_AS(make_measure(g, 0.1, -0.1, {}), ValidationError);
  CHECK_THROWS_AS(make_measure(g, 0.1, 0.0, {{0.0, -1.0}}), ValidationError);

  for (std::uint64_t seed = 0; seed < 5; ++seed)
    for (const auto& s : all_specs()) {
      Rng rng = make_rng(seed, 0);
      const auto m = sample(s, 0.05, Grid(32.0, 512), rng);
      CHECK(m.deposited_mass() == doctest::Approx(m.total_mass()).epsilon(1e-12));
    }
}

TEST_CASE("mass_in uses exact membership on the torus")
{
  Grid g(8.0, 16);
  const auto mu = make_measure(g, 1.0, 0.5, {{0.0, 1.0}, {0.5, 2.0}, {3.9, 4.0}});
  CHECK(mu.mass_in(0.0, 0.5) == doctest::Approx(0.25 + 1.0));
  CHECK(mu.mass_in(-0.5, 0.5) == doctest::Approx(0.5 + 1.0));
  CHECK(mu.mass_in(3.5, 4.5) == doctest::Approx(0.5 + 4.0));
}

TEST_CASE("sampled total mass has unit intensity")
{
  const Grid g(32.0, 256);
  for (const auto& s : all_specs()) {
    std::vector<double> mass(10000);
    parallel_for(mass.size(), [&](std::size_t r) {
      Rng rng = make_rng(42, r);
      mass[r] = sample(s, 0.1, g, rng).total_mass();
    });
    const Estimate e = mean_se(mass);
    CHECK(std::abs(e.mean - 32.0) < 4.0 * e.se);
  }
}

TEST_CASE("Poisson atom count and unit-interval variance")
{
  const Grid g(32.0, 256);
  std::vector<double> count(4000), unit(10000);
  parallel_for(count.size(), [&](std::size_t r) {
    Rng rng = make_rng(7, r);
    count[r] = static_cast<double>(sample(LevySpec::poisson(), 1.0, g, rng).atoms.size());
  });
  const Estimate c = mean_se(count);
  CHECK(std::abs(c.mean - 32.0) < 4.0 * c.se);

  parallel_for(unit.size(), [&](std::size_t r) {
    Rng rng = make_rng(8, r);
    unit[r] = sample(LevySpec::poisson(), 0.1, g, rng).mass_in(0.0, 1.0);
  });
  // Variance = eps * m2 = 0.1; its SE from the fourth central moment.
  const Estimate m = mean_se(unit);
  std::vector<double> sq(unit.size());
  for (std::size_t i = 0; i < unit.size(); ++i)
    sq[i] = (unit[i] - m.mean) * (unit[i] - m.mean);
  const Estimate v = mean_se(sq);
  CHECK(std::abs(v.mean - 0.1) < 4.0 * v.se);
}

TEST_CASE("Laplace functional closed form")
{
  const Grid g(4.0, 32);
  CHECK(laplace_functional_exact(LevySpec::poisson(), 0.3, RealField(g)) == 1.0);

  const RealField f = indicator(g, 0.0, 1.0);
  CHECK(laplace_functional_exact(LevySpec::poisson(), 1.0, f) ==
        doctest::Approx(std::exp(std::exp(-1.0) - 1.0)).epsilon(1e-14));

  // Monte Carlo mean of exp(-int f dmu).
  std::vector<double> v(100000);
  parallel_for(v.size(), [&](std::size_t r) {
    Rng rng = make_rng(99, r);
    v[r] = std::exp(-sample(LevySpec::poisson(), 1.0, g, rng).integrate_cellwise(f));
  });
  const Estimate e = mean_se(v);
  CHECK(std::abs(e.mean - std::exp(std::exp(-1.0) - 1.0)) < 4.0 * e.se);

  CHECK_THROWS_AS(laplace_functional_exact(LevySpec::gamma(), 1.0, indicator(g, 0.0, 1.0, -1.0)),
                  DomainError);
}

TEST_CASE("characteristic functional closed form and Gaussian limit")
{
  const Grid g(4.0, 32);
  CHECK(std::abs(characteristic_functional_exact(LevySpec::poisson(), 0.5, RealField(g)) - 1.0) <
        1e-15);

  const RealField F = indicator(g, 0.0, 1.0);
  const cplx v = characteristic_functional_exact(LevySpec::poisson(), 0.01, F);
  // Characteristic function of sqrt(eps) (N - 1/eps), N ~ Poisson(1/eps).
  const double eps = 0.01, t = std::sqrt(eps);
  const cplx oracle =
      std::exp((1.0 / eps) * (std::exp(cplx(0.0, t)) - 1.0) - cplx(0.0, t / eps));
  CHECK(std::abs(v - oracle) < 1e-12);
  CHECK(std::abs(v) == doctest::Approx(std::exp(-100.0 * (1.0 - std::cos(0.1)))));
  CHECK(std::arg(v) == doctest::Approx(-100.0 * (0.1 - std::sin(0.1))));

  double prev = 1e300;
  for (double e : {0.1, 0.01, 0.001, 0.0001}) {
    const double d = std::abs(characteristic_functional_exact(LevySpec::poisson(), e, F) -
                              characteristic_functional_limit(F));
    CHECK(d < prev);
    prev = d;
  }
  CHECK(prev < 1e-2);
}

TEST_CASE("mollification")
{
  const Grid g(8.0, 256);
  const auto flat = mollify(lebesgue_measure(g), 0.5);
  for (double d : flat.density)
    CHECK(d == doctest::Approx(1.0).epsilon(1e-15));

  const auto one = mollify(make_measure(g, 1.0, 0.25, {{0.0, 1.0}}), 0.5);
  CHECK(one.total_mass() == doctest::Approx(1.0 + 0.25 * 8.0).epsilon(1e-10));
  double peak = 0.0;
  for (double d : one.density)
    peak = std::max(peak, d - 0.25);
  CHECK(peak == doctest::Approx(2.0 * std::exp(-1.0) / bump_mass()).epsilon(1e-3));

  Rng rng = make_rng(5, 0);
  const auto mu = sample(LevySpec::gamma(), 0.1, g, rng);
  for (double h : {1.0, 0.5, 0.1})
    CHECK(mollify(mu, h).total_mass() == doctest::Approx(mu.total_mass()).epsilon(1e-10));

  CHECK_THROWS_AS(mollify(mu, 0.05), ResolutionError);
  CHECK_THROWS_AS(mollify(mu, 1.5), ValidationError);
}

TEST_CASE("measure CSV export")
{
  const Grid g(4.0, 8);
  std::ostringstream os;
  write_csv(os, make_measure(g, 0.5, 0.25, {{1.5, 0.5}}));
  CHECK(os.str() == "# c=0.25,epsilon=0.5,L=4\nposition,weight\n1.5,0.5\n");
}

TEST_CASE("sampling is reproducible per seed")
{
  const Grid g(16.0, 128);
  Rng a = make_rng(3, 17), b = make_rng(3, 17);
  const auto ma = sample(LevySpec::poisson(), 0.2, g, a);
  const auto mb = sample(LevySpec::poisson(), 0.2, g, b);
  REQUIRE(ma.atoms.size() == mb.atoms.size());
  for (std::size_t i = 0; i < ma.atoms.size(); ++i)
    CHECK(ma.atoms[i].position == mb.atoms[i].position);
  CHECK_THROWS_AS(sample(LevySpec::poisson(), 1.5, g, a), ValidationError);
}

TEST_CASE("stationarity and independent increments")
{
  const Grid g(16.0, 256);
  const std::size_t R = 10000;
  for (const auto& s : all_specs()) {
    std::vector<double> a(R), b(R), c(R);
    parallel_for(R, [&](std::size_t r) {
      Rng rng = make_rng(21, r);
      const auto mu = sample(s, 0.1, g, rng);
      a[r] = mu.mass_in(0.0, 1.0);
      b[r] = mu.mass_in(2.0, 3.0);
      c[r] = mu.mass_in(-5.25, -4.25);
    });
    // Shifted window drawn from replicas disjoint from those of a.
    std::vector<double> first(a.begin(), a.begin() + R / 2), shifted(c.begin() + R / 2, c.end());
    CHECK(ks_two_sample(first, shifted) < ks_two_sample_critical(R / 2, R / 2, 0.01));
    CHECK(std::abs(correlation(a, b)) < 4.0 / std::sqrt(static_cast<double>(R)));
  }
}
