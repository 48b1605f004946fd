#include "sprinkle/grid.hpp"

#include "format.hpp"
#include "sprinkle/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>

namespace sprinkle {

Grid::Grid(double length, int cells) : length_(length), cells_(cells)
{
  if (!(length > 0.0) || !std::isfinite(length))
    throw ValidationError("grid length must be positive and finite");
  if (cells < 2 || (cells & (cells - 1)) != 0)
    throw ValidationError("grid size must be a power of two >= 2");
}

std::vector<double> Grid::nodes() const
{
  std::vector<double> xs(static_cast<std::size_t>(cells_));
  for (int j = 0; j < cells_; ++j)
    xs[j] = x(j);
  return xs;
}

double Grid::wavenumber(int m) const noexcept
{
  const int shifted = m < cells_ / 2 ? m : m - cells_;
  return 2.0 * std::numbers::pi * shifted / length_;
}

std::vector<double> Grid::wavenumbers() const
{
  std::vector<double> k(static_cast<std::size_t>(cells_));
  for (int m = 0; m < cells_; ++m)
    k[m] = wavenumber(m);
  return k;
}

double Grid::wrap(double x) const noexcept
{
  double y = std::fmod(x + 0.5 * length_, length_);
  if (y < 0.0)
    y += length_;
  if (y >= length_)
    y -= length_;
  return y - 0.5 * length_;
}

int Grid::cell_of(double x) const noexcept
{
  const double u = (wrap(x) + 0.5 * length_) / dx();
  int j = static_cast<int>(std::floor(u));
  return std::clamp(j, 0, cells_ - 1);
}

GridField::GridField(const Grid& g, std::vector<cplx> v) : grid(g), values(std::move(v))
{
  if (values.size() != static_cast<std::size_t>(g.size()))
    throw ValidationError("field length does not match grid");
}

GridField& GridField::operator+=(const GridField& o)
{
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] += o.values[i];
  return *this;
}

GridField& GridField::operator-=(const GridField& o)
{
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] -= o.values[i];
  return *this;
}

GridField& GridField::operator*=(cplx a)
{
  for (auto& v : values)
    v *= a;
  return *this;
}

GridField operator+(GridField a, const GridField& b) { return a += b; }
GridField operator-(GridField a, const GridField& b) { return a -= b; }
GridField operator*(cplx a, GridField f) { return f *= a; }

RealField::RealField(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v))
{
  if (values.size() != static_cast<std::size_t>(g.size()))
    throw ValidationError("field length does not match grid");
}

GridField RealField::to_complex() const
{
  GridField f(grid);
  for (std::size_t i = 0; i < values.size(); ++i)
    f.values[i] = values[i];
  return f;
}

namespace {

struct Plans {
  fftw_plan forward;
  fftw_plan backward;
};

std::mutex plan_mutex;

const Plans& plans_for(int n)
{
  static std::map<int, Plans> cache;
  std::lock_guard lock(plan_mutex);
  auto it = cache.find(n);
  if (it != cache.end())
    return it->second;
  // Estimate mode keeps the algorithm choice, and hence rounding, fixed
  // from run to run.
  std::vector<cplx> scratch(static_cast<std::size_t>(n));
  auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  Plans plans{fftw_plan_dft_1d(n, p, p, FFTW_FORWARD, flags),
              fftw_plan_dft_1d(n, p, p, FFTW_BACKWARD, flags)};
  return cache.emplace(n, plans).first->second;
}

} // namespace

void fft_forward(std::span<cplx> data)
{
  const auto& p = plans_for(static_cast<int>(data.size()));
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(p.forward, ptr, ptr);
}

void fft_inverse(std::span<cplx> data)
{
  const auto& p = plans_for(static_cast<int>(data.size()));
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(p.backward, ptr, ptr);
  const double scale = 1.0 / static_cast<double>(data.size());
  for (auto& v : data)
    v *= scale;
}

cplx inner(const GridField& f, const GridField& g)
{
  cplx acc = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i)
    acc += f.values[i] * std::conj(g.values[i]);
  return acc * f.grid.dx();
}

double real_pairing(const GridField& f, const GridField& g)
{
  double acc = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i)
    acc += f.values[i].real() * g.values[i].real() + f.values[i].imag() * g.values[i].imag();
  return acc * f.grid.dx();
}

double l2_norm(const GridField& f)
{
  double acc = 0.0;
  for (const auto& v : f.values)
    acc += std::norm(v);
  return std::sqrt(acc * f.grid.dx());
}

double l2_norm(const RealField& f)
{
  double acc = 0.0;
  for (double v : f.values)
    acc += v * v;
  return std::sqrt(acc * f.grid.dx());
}

double linf_norm(const GridField& f)
{
  double m = 0.0;
  for (const auto& v : f.values)
    m = std::max(m, std::abs(v));
  return m;
}

double sobolev_norm(const GridField& f, double s)
{
  std::vector<cplx> spec = f.values;
  fft_forward(spec);
  const Grid& g = f.grid;
  double acc = 0.0;
  for (int m = 0; m < g.size(); ++m) {
    const double k = g.wavenumber(m);
    acc += std::pow(1.0 + k * k, s) * std::norm(spec[m]);
  }
  return std::sqrt(acc * g.dx() / g.size());
}

double sobolev_norm(const RealField& f, double s) { return sobolev_norm(f.to_complex(), s); }

GridField derivative(const GridField& f)
{
  GridField out = f;
  fft_forward(out.values);
  for (int m = 0; m < f.grid.size(); ++m)
    out.values[m] *= cplx(0.0, f.grid.wavenumber(m));
  fft_inverse(out.values);
  return out;
}

namespace {

double smooth_transition(double t) noexcept
{
  // 0 for t <= 0, 1 for t >= 1, C-infinity in between.
  auto g = [](double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; };
  const double a = g(t);
  const double b = g(1.0 - t);
  return a / (a + b);
}

} // namespace

double chi(double x) noexcept
{
  const double ax = std::abs(x);
  if (ax <= 1.0)
    return 1.0;
  if (ax >= 2.0)
    return 0.0;
  return smooth_transition(2.0 - ax);
}

double bump(double x) noexcept
{
  const double ax2 = x * x;
  return ax2 < 1.0 ? std::exp(-1.0 / (1.0 - ax2)) : 0.0;
}

double bump_mass()
{
  // The bump is flat to all orders at the endpoints, so the trapezoid rule
  // converges faster than any power.
  static const double mass = [] {
    constexpr int n = 4096;
    const double h = 2.0 / n;
    double acc = 0.0;
    for (int i = 1; i < n; ++i)
      acc += bump(-1.0 + i * h);
    return acc * h;
  }();
  return mass;
}

GridField littlewood_paley(const GridField& f, double N, Band side)
{
  GridField low = f;
  fft_forward(low.values);
  for (int m = 0; m < f.grid.size(); ++m)
    low.values[m] *= chi(f.grid.wavenumber(m) / N);
  fft_inverse(low.values);
  if (side == Band::Low)
    return low;
  return f - low;
}

GridField cutoff(const GridField& f, double R)
{
  GridField out = f;
  for (int j = 0; j < f.grid.size(); ++j)
    out.values[j] *= chi(f.grid.x(j) / R);
  return out;
}

RealField partition_bump(int k, const Grid& grid)
{
  const double L = grid.length();
  if (std::abs(L - std::round(L)) > 1e-12 || std::round(L) < 2.0)
    throw ValidationError("partition of unity needs an integer domain length >= 2");
  if (grid.dx() > 0.1 + 1e-15)
    throw ResolutionError("partition of unity needs dx <= 0.1");

  RealField rho(grid);
  for (int j = 0; j < grid.size(); ++j) {
    const double d = grid.wrap(grid.x(j) - k);
    if (std::abs(d) >= 1.0)
      continue;
    const double base = std::floor(d);
    double denom = 0.0;
    for (int shift = -1; shift <= 2; ++shift)
      denom += bump(d - (base + shift));
    rho.values[j] = bump(d) / denom;
  }
  return rho;
}

void write_csv(std::ostream& os, const GridField& f)
{
  os << "x,re,im\n";
  using detail::shortest;
  for (int j = 0; j < f.grid.size(); ++j)
    os << shortest(f.grid.x(j)) << ',' << shortest(f.values[j].real()) << ','
       << shortest(f.values[j].imag()) << '\n';
}

} // namespace sprinkle
