#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sprinkle/errors.hpp"
#include "sprinkle/grid.hpp"
#include "sprinkle/rng.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace sprinkle;
using std::numbers::pi;

namespace {

GridField random_field(const Grid& g, std::uint64_t seed)
{
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  GridField f(g);
  for (auto& v : f.values)
    v = {n(rng), n(rng)};
  return f;
}

GridField plane_wave(const Grid& g, double xi)
{
  GridField f(g);
  for (int j = 0; j < g.size(); ++j)
    f[j] = std::polar(1.0, xi * g.x(j));
  return f;
}

// Smooth, rapidly decaying test field.
GridField gaussian(const Grid& g, double width = 1.0)
{
  GridField f(g);
  for (int j = 0; j < g.size(); ++j)
    f[j] = std::exp(-g.x(j) * g.x(j) / (width * width));
  return f;
}

} // namespace

TEST_CASE("grid construction and geometry")
{
  Grid g(8.0, 16);
  CHECK(g.dx() == doctest::Approx(0.5));
  CHECK(g.x(0) == doctest::Approx(-4.0));
  CHECK(g.dx() * g.size() == doctest::Approx(g.length()));
  CHECK(g.cell_of(-4.0) == 0);
  CHECK(g.cell_of(3.99) == 15);
  CHECK(g.cell_of(4.0) == 0); // wraps
  CHECK(g.wrap(5.0) == doctest::Approx(-3.0));
  CHECK_THROWS_AS(Grid(8.0, 12), ValidationError);
  CHECK_THROWS_AS(Grid(-1.0, 16), ValidationError);
}

TEST_CASE("frequencies are symmetric up to Nyquist")
{
  Grid g(2 * pi, 8);
  const auto k = g.wavenumbers();
  CHECK(k[0] == 0.0);
  CHECK(k[1] == doctest::Approx(1.0));
  CHECK(k[4] == doctest::Approx(-4.0));
  CHECK(k[7] == doctest::Approx(-1.0));
  for (int m = 1; m < 4; ++m)
    CHECK(k[m] == doctest::Approx(-k[8 - m]));
}

TEST_CASE("transform round trip and Parseval")
{
  Grid g(10.0, 128);
  const GridField f = random_field(g, 3);
  GridField h = f;
  fft_forward(h.values);
  double spectral = 0.0;
  for (const auto& c : h.values)
    spectral += std::norm(c);
  // sum |f|^2 dx = sum |F_m|^2 dx / M
  CHECK(spectral * g.dx() / g.size() == doctest::Approx(std::pow(l2_norm(f), 2)).epsilon(1e-12));
  fft_inverse(h.values);
  CHECK(l2_norm(h - f) / l2_norm(f) < 1e-12);
}

TEST_CASE("Sobolev norms")
{
  Grid g(2 * pi, 64);
  CHECK(sobolev_norm(GridField(g), 1.0) == 0.0);

  const GridField f = random_field(g, 5);
  CHECK(sobolev_norm(f, 0.0) == doctest::Approx(l2_norm(f)).epsilon(1e-12));

  // Single mode xi = 1: <xi>^2 = 2.
  const GridField e = plane_wave(g, 1.0);
  CHECK(sobolev_norm(e, 1.0) == doctest::Approx(std::sqrt(2.0) * l2_norm(e)).epsilon(1e-12));

  // Monotone in s.
  double prev = 0.0;
  for (double s = -2.0; s <= 2.0; s += 0.25) {
    const double n = sobolev_norm(f, s);
    CHECK(n >= prev);
    prev = n;
  }
}

TEST_CASE("duality between H^s and H^-s")
{
  Grid g(16.0, 128);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const GridField f = random_field(g, 100 + seed);
    const GridField h = random_field(g, 200 + seed);
    for (double s : {0.25, 0.75, 1.5})
      CHECK(std::abs(inner(f, h)) <= sobolev_norm(f, s) * sobolev_norm(h, -s) * (1 + 1e-12));
  }
}

TEST_CASE("spectral derivative is exact on single modes")
{
  Grid g(2 * pi, 32);
  const GridField e = plane_wave(g, 3.0);
  const GridField d = derivative(e);
  for (int j = 0; j < g.size(); ++j)
    CHECK(std::abs(d[j] - cplx(0, 3) * e[j]) < 1e-12);
}

TEST_CASE("cutoff and bump profiles")
{
  CHECK(chi(0.0) == 1.0);
  CHECK(chi(1.0) == 1.0);
  CHECK(chi(-0.7) == 1.0);
  CHECK(chi(2.0) == 0.0);
  CHECK(chi(-3.0) == 0.0);
  double prev = 1.0;
  for (double x = 1.0; x <= 2.0; x += 0.01) {
    CHECK(chi(x) <= prev);
    CHECK(chi(x) == doctest::Approx(chi(-x)));
    prev = chi(x);
  }
  CHECK(bump(0.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(bump(1.0) == 0.0);
  CHECK(bump_mass() == doctest::Approx(0.443994).epsilon(1e-6));
}

TEST_CASE("Littlewood-Paley projections")
{
  Grid g(4 * pi, 128); // frequencies are multiples of 1/2
  const GridField f = random_field(g, 9);
  for (double N : {1.0, 2.0, 4.0}) {
    const GridField lo = littlewood_paley(f, N, Band::Low);
    const GridField hi = littlewood_paley(f, N, Band::High);
    CHECK(l2_norm(lo + hi - f) < 1e-12 * l2_norm(f));
  }

  const GridField slow = plane_wave(g, 0.5);
  CHECK(l2_norm(littlewood_paley(slow, 1.0, Band::Low) - slow) < 1e-12);

  const GridField fast = plane_wave(g, 6.0);
  CHECK(l2_norm(littlewood_paley(fast, 2.0, Band::Low)) < 1e-12);

  // Bernstein: ||P_{<=N} f||_{H^1} <= 2 <2N> ||f||_{L^2}.
  for (double N : {1.0, 2.0, 8.0}) {
    const double bound = 2.0 * std::sqrt(1.0 + 4.0 * N * N) * l2_norm(f);
    CHECK(sobolev_norm(littlewood_paley(f, N, Band::Low), 1.0) <= bound);
  }
}

TEST_CASE("spatial cutoff")
{
  Grid g(16.0, 256);
  const GridField f = random_field(g, 4);
  CHECK(l2_norm(cutoff(f, 16.0) - f) == 0.0);

  GridField ones(g);
  for (auto& v : ones.values)
    v = 1.0;
  const GridField c = cutoff(ones, 2.0);
  for (int j = 0; j < g.size(); ++j)
    CHECK(c[j].real() == doctest::Approx(chi(g.x(j) / 2.0)));

  double prev = 1e300;
  for (double R = 0.5; R <= 10.0; R += 0.5) {
    const double tail = l2_norm(f - cutoff(f, R));
    CHECK(tail <= prev + 1e-14);
    prev = tail;
  }
}

TEST_CASE("partition of unity")
{
  Grid g(8.0, 128);
  std::vector<double> sum(static_cast<std::size_t>(g.size()), 0.0);
  for (int k = -4; k < 4; ++k) {
    const RealField rho = partition_bump(k, g);
    for (int j = 0; j < g.size(); ++j)
      sum[j] += rho[j];
  }
  for (double s : sum)
    CHECK(s == doctest::Approx(1.0).epsilon(1e-10));

  const RealField rho0 = partition_bump(0, g);
  for (int j = 0; j < g.size(); ++j) {
    if (std::abs(g.x(j)) >= 1.0)
      CHECK(rho0[j] == 0.0);
    if (g.x(j) == 0.0)
      CHECK(rho0[j] == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(partition_bump(0, Grid(8.0, 64)), ResolutionError);
}

TEST_CASE("field CSV export")
{
  Grid g(2.0, 2);
  GridField f(g, {cplx(1, 2), cplx(3, -4)});
  std::ostringstream os;
  write_csv(os, f);
  CHECK(os.str() == "x,re,im\n-1,1,2\n0,3,-4\n");
}

TEST_CASE("Gaussian norms agree with closed forms")
{
  // ||e^{-x^2}||_{L^2}^2 = sqrt(pi/2).
  Grid g(20.0, 256);
  CHECK(std::pow(l2_norm(gaussian(g)), 2) == doctest::Approx(std::sqrt(pi / 2)).epsilon(1e-12));
}
