#include "sprinkle/linearized.hpp"
#include "sprinkle/errors.hpp"
#include "sprinkle/stats.hpp"

#include "free_flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>

namespace sprinkle {

namespace {

constexpr int kMaxDenseCells = 512;
const double kSqrt3 = std::sqrt(3.0);

/// 2x2 real matrix [[xx, xy], [yx, yy]] acting on (Re u, Im u).
struct Block {
  double xx = 1.0, xy = 0.0, yx = 0.0, yy = 1.0;

  cplx apply(cplx u) const
  {
    return {xx * u.real() + xy * u.imag(), yx * u.real() + yy * u.imag()};
  }
  cplx apply_transpose(cplx u) const
  {
    return {xx * u.real() + yx * u.imag(), xy * u.real() + yy * u.imag()};
  }
};

/// Exact flow over time tau of i u_t = 4|p|^2 u + 2 p^2 conj(u) with p frozen.
/// Writing u = (p/|p|) v, v = x + iy obeys x' = 2a y, y' = -6a x, a = |p|^2.
Block potential_block(cplx p, double tau)
{
  const double a = std::norm(p);
  if (a == 0.0)
    return {};
  const double w = std::sqrt(12.0) * a;
  const double c = std::cos(w * tau), s = std::sin(w * tau);
  // Q in the rotated frame.
  const double qxx = c, qxy = s / kSqrt3, qyx = -kSqrt3 * s, qyy = c;
  const double r = std::sqrt(a);
  const double ct = p.real() / r, st = p.imag() / r;
  // G = R Q R^T with R = [[ct, -st], [st, ct]].
  const double m_xx = qxx * ct + qxy * (-st);
  const double m_xy = qxx * st + qxy * ct;
  const double m_yx = qyx * ct + qyy * (-st);
  const double m_yy = qyx * st + qyy * ct;
  Block g;
  g.xx = ct * m_xx - st * m_yx;
  g.xy = ct * m_xy - st * m_yy;
  g.yx = st * m_xx + ct * m_yx;
  g.yy = st * m_xy + ct * m_yy;
  return g;
}

int step_count(double span, double dt)
{
  if (span == 0.0)
    return 0;
  return std::max(1, static_cast<int>(std::ceil(std::abs(span) / dt - 1e-9)));
}

class LinearizedStepper {
public:
  LinearizedStepper(const Trajectory& psi, const SolverConfig& cfg)
      : psi_(psi), flow_(cfg.grid, cfg.dealias)
  {
    if (!(psi.grid == cfg.grid))
      throw ValidationError("background trajectory and solver grid differ");
  }

  void potential(std::vector<cplx>& u, const GridField& mid, double tau, bool transpose) const
  {
    for (std::size_t j = 0; j < u.size(); ++j) {
      const Block g = potential_block(mid.values[j], tau);
      u[j] = transpose ? g.apply_transpose(u[j]) : g.apply(u[j]);
    }
  }

  /// One step of size h starting at time s; adds h * B f at the midpoint
  /// when `forcing` is non-null.
  void forward(std::vector<cplx>& u, double s, double h, const GridField* forcing)
  {
    const GridField mid = psi_.state_at(s + 0.5 * h);
    flow_.apply(u, 0.5 * h);
    potential(u, mid, 0.5 * h, false);
    if (forcing != nullptr) {
      for (std::size_t j = 0; j < u.size(); ++j) {
        const cplx p = mid.values[j];
        const cplx b = cplx(0.0, -2.0) * std::norm(p) * p;
        u[j] += h * b * forcing->values[j];
      }
    }
    potential(u, mid, 0.5 * h, false);
    flow_.apply(u, 0.5 * h);
  }

  /// Transpose of `forward`, accumulating h * B^T g into `adjoint_sum`.
  void backward(std::vector<cplx>& g, double s, double h, std::vector<cplx>* adjoint_sum)
  {
    const GridField mid = psi_.state_at(s + 0.5 * h);
    flow_.apply(g, -0.5 * h);
    potential(g, mid, 0.5 * h, true);
    if (adjoint_sum != nullptr) {
      for (std::size_t j = 0; j < g.size(); ++j) {
        const cplx p = mid.values[j];
        const cplx b = cplx(0.0, -2.0) * std::norm(p) * p;
        (*adjoint_sum)[j] += h * std::conj(b) * g[j];
      }
    }
    potential(g, mid, 0.5 * h, true);
    flow_.apply(g, -0.5 * h);
  }

private:
  const Trajectory& psi_;
  detail::FreeFlow flow_;
};

void check_dense(const Grid& grid)
{
  if (grid.size() > kMaxDenseCells)
    throw SizeError("dense operator assembly is limited to M <= 512");
}

GridField basis_vector(const Grid& grid, int column)
{
  GridField e(grid);
  const int M = grid.size();
  e.values[static_cast<std::size_t>(column % M)] = column < M ? cplx(1.0, 0.0) : cplx(0.0, 1.0);
  return e;
}

} // namespace

std::vector<double> stack(const GridField& u)
{
  const std::size_t M = u.values.size();
  std::vector<double> v(2 * M);
  for (std::size_t j = 0; j < M; ++j) {
    v[j] = u.values[j].real();
    v[M + j] = u.values[j].imag();
  }
  return v;
}

GridField unstack(const Grid& grid, const std::vector<double>& v)
{
  const std::size_t M = static_cast<std::size_t>(grid.size());
  if (v.size() != 2 * M)
    throw ValidationError("stacked vector has the wrong length");
  GridField u(grid);
  for (std::size_t j = 0; j < M; ++j)
    u.values[j] = {v[j], v[M + j]};
  return u;
}

GridField RealLinearOperator::apply(const GridField& u) const
{
  const auto x = stack(u);
  std::vector<double> y(static_cast<std::size_t>(dim), 0.0);
  for (int r = 0; r < dim; ++r) {
    double acc = 0.0;
    for (int c = 0; c < dim; ++c)
      acc += (*this)(r, c) * x[static_cast<std::size_t>(c)];
    y[static_cast<std::size_t>(r)] = acc;
  }
  return unstack(grid, y);
}

GridField RealLinearOperator::apply_transpose(const GridField& u) const
{
  const auto x = stack(u);
  std::vector<double> y(static_cast<std::size_t>(dim), 0.0);
  for (int r = 0; r < dim; ++r) {
    const double xr = x[static_cast<std::size_t>(r)];
    for (int c = 0; c < dim; ++c)
      y[static_cast<std::size_t>(c)] += (*this)(r, c) * xr;
  }
  return unstack(grid, y);
}

RealLinearOperator RealLinearOperator::transpose() const
{
  RealLinearOperator out = *this;
  std::swap(out.t, out.tau);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c)
      out(c, r) = (*this)(r, c);
  return out;
}

double RealLinearOperator::norm2(int iterations) const
{
  std::vector<double> x(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i)
    x[static_cast<std::size_t>(i)] = 1.0 + 0.01 * std::sin(1.0 + i);
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const GridField y = apply(unstack(grid, x));
    const auto z = stack(apply_transpose(y));
    double n = 0.0;
    for (double v : z)
      n += v * v;
    n = std::sqrt(n);
    if (n == 0.0)
      return 0.0;
    for (int i = 0; i < dim; ++i)
      x[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)] / n;
    lambda = n;
  }
  return std::sqrt(lambda);
}

namespace {

constexpr char kMagic[8] = {'S', 'P', 'R', 'K', 'O', 'P', '0', '1'};

template <class T>
void put(std::ostream& os, T v)
{
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is)
{
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is)
    throw ValidationError("truncated operator file");
  return v;
}

} // namespace

void RealLinearOperator::write_binary(std::ostream& os) const
{
  os.write(kMagic, sizeof(kMagic));
  put<std::int32_t>(os, dim);
  put<std::int32_t>(os, grid.size());
  put<double>(os, grid.length());
  put<double>(os, t);
  put<double>(os, tau);
  os.write(reinterpret_cast<const char*>(entries.data()),
           static_cast<std::streamsize>(entries.size() * sizeof(double)));
}

RealLinearOperator RealLinearOperator::read_binary(std::istream& is)
{
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ValidationError("not an operator file");
  RealLinearOperator op;
  op.dim = get<std::int32_t>(is);
  const int M = get<std::int32_t>(is);
  const double L = get<double>(is);
  op.grid = Grid(L, M);
  op.t = get<double>(is);
  op.tau = get<double>(is);
  if (op.dim != 2 * M)
    throw ValidationError("operator dimension does not match its grid");
  op.entries.resize(static_cast<std::size_t>(op.dim) * op.dim);
  is.read(reinterpret_cast<char*>(op.entries.data()),
          static_cast<std::streamsize>(op.entries.size() * sizeof(double)));
  if (!is)
    throw ValidationError("truncated operator file");
  return op;
}

GridField propagate_linearized(const GridField& u0, double tau, double t, const Trajectory& psi,
                               const SolverConfig& cfg)
{
  if (!psi.covers(tau, t))
    throw CoverageError("background trajectory does not cover the propagation interval");
  LinearizedStepper stepper(psi, cfg);
  const int n = step_count(t - tau, cfg.dt);
  GridField u = u0;
  if (n == 0)
    return u;
  const double h = (t - tau) / n;
  for (int k = 0; k < n; ++k)
    stepper.forward(u.values, tau + k * h, h, nullptr);
  return u;
}

RealLinearOperator assemble_operator(double tau, double t, const Trajectory& psi,
                                     const SolverConfig& cfg)
{
  check_dense(cfg.grid);
  const int M = cfg.grid.size();
  RealLinearOperator op;
  op.grid = cfg.grid;
  op.t = t;
  op.tau = tau;
  op.dim = 2 * M;
  op.entries.assign(static_cast<std::size_t>(op.dim) * op.dim, 0.0);
  std::vector<std::vector<double>> columns(static_cast<std::size_t>(op.dim));
  parallel_for(static_cast<std::size_t>(op.dim), [&](std::size_t c) {
    columns[c] =
        stack(propagate_linearized(basis_vector(cfg.grid, static_cast<int>(c)), tau, t, psi, cfg));
  });
  for (int c = 0; c < op.dim; ++c)
    for (int r = 0; r < op.dim; ++r)
      op(r, c) = columns[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)];
  return op;
}

Trajectory solve_forced(const Trajectory& psi, const GridField& forcing, const SolverConfig& cfg)
{
  if (!psi.covers(0.0, cfg.T))
    throw CoverageError("background trajectory does not cover [0, T]");
  LinearizedStepper stepper(psi, cfg);
  const int n = step_count(cfg.T, cfg.dt);
  const double h = n == 0 ? 0.0 : cfg.T / n;

  Trajectory out;
  out.grid = cfg.grid;
  GridField u(cfg.grid);
  out.times.push_back(0.0);
  out.states.push_back(u);
  out.mass.push_back(0.0);
  out.energy.push_back(0.0);
  for (int k = 0; k < n; ++k) {
    stepper.forward(u.values, k * h, h, &forcing);
    if ((k + 1) % cfg.store_every == 0 || k + 1 == n) {
      out.times.push_back(k + 1 == n ? cfg.T : (k + 1) * h);
      out.states.push_back(u);
      out.mass.push_back(mass(u));
      out.energy.push_back(0.0);
    }
  }
  return out;
}

WhiteNoiseSample sample_white_noise(const Grid& grid, Rng& rng, std::optional<double> h)
{
  WhiteNoiseSample xi;
  xi.grid = grid;
  xi.h = h;
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(grid.dx()));
  xi.values.resize(static_cast<std::size_t>(grid.size()));
  for (auto& v : xi.values)
    v = normal(rng);
  if (h)
    xi.values = mollify_field(RealField(grid, xi.values), *h).values;
  return xi;
}

RealField mollify_field(const RealField& f, double h)
{
  const Grid& grid = f.grid;
  if (!(h > 0.0) || h > 1.0)
    throw ValidationError("mollification scale h must lie in (0, 1]");
  if (h < 2.0 * grid.dx() * (1.0 - 1e-12))
    throw ResolutionError("mollification scale h must be at least 2 dx");
  const int M = grid.size();
  const double dx = grid.dx();
  const int reach = std::min(M / 2 - 1, static_cast<int>(std::ceil(h / dx)) + 1);
  std::vector<double> kernel(static_cast<std::size_t>(2 * reach + 1));
  double norm = 0.0;
  for (int o = -reach; o <= reach; ++o) {
    const double k = bump(o * dx / h);
    kernel[static_cast<std::size_t>(o + reach)] = k;
    norm += k;
  }
  for (auto& k : kernel)
    k /= norm; // discrete unit mass: sum k = 1, i.e. sum (k/dx) dx = 1
  RealField out(grid);
  for (int i = 0; i < M; ++i) {
    double acc = 0.0;
    for (int o = -reach; o <= reach; ++o)
      acc += kernel[static_cast<std::size_t>(o + reach)] *
             f.values[static_cast<std::size_t>(((i - o) % M + M) % M)];
    out.values[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

Trajectory solve_fluctuation(const Trajectory& psi, const WhiteNoiseSample& xi,
                             const SolverConfig& cfg)
{
  return solve_forced(psi, RealField(xi.grid, xi.values).to_complex(), cfg);
}

GridField apply_kt(double t, const Trajectory& psi, const GridField& f, const SolverConfig& cfg)
{
  if (!psi.covers(0.0, t))
    throw CoverageError("background trajectory does not cover [0, t]");
  LinearizedStepper stepper(psi, cfg);
  const int n = step_count(t, cfg.dt);
  GridField u(cfg.grid);
  if (n == 0)
    return u;
  const double h = t / n;
  for (int k = 0; k < n; ++k)
    stepper.forward(u.values, k * h, h, &f);
  return u;
}

GridField apply_kt_adjoint(double t, const Trajectory& psi, const GridField& g,
                           const SolverConfig& cfg)
{
  if (!psi.covers(0.0, t))
    throw CoverageError("background trajectory does not cover [0, t]");
  LinearizedStepper stepper(psi, cfg);
  const int n = step_count(t, cfg.dt);
  GridField sum(cfg.grid);
  if (n == 0)
    return sum;
  const double h = t / n;
  std::vector<cplx> work = g.values;
  for (int k = n - 1; k >= 0; --k)
    stepper.backward(work, k * h, h, &sum.values);
  return sum;
}

RealLinearOperator kt_operator(double t, const Trajectory& psi, const SolverConfig& cfg)
{
  check_dense(cfg.grid);
  const int M = cfg.grid.size();
  RealLinearOperator op;
  op.grid = cfg.grid;
  op.t = t;
  op.tau = 0.0;
  op.dim = 2 * M;
  op.entries.assign(static_cast<std::size_t>(op.dim) * op.dim, 0.0);
  std::vector<std::vector<double>> columns(static_cast<std::size_t>(op.dim));
  parallel_for(static_cast<std::size_t>(op.dim), [&](std::size_t c) {
    columns[c] = stack(apply_kt(t, psi, basis_vector(cfg.grid, static_cast<int>(c)), cfg));
  });
  for (int c = 0; c < op.dim; ++c)
    for (int r = 0; r < op.dim; ++r)
      op(r, c) = columns[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)];
  return op;
}

namespace {

/// Re K_t^* f, optionally smoothed for mollified noise.
RealField noise_response(double t, const Trajectory& psi, const GridField& f,
                         const SolverConfig& cfg, std::optional<double> noise_h)
{
  const GridField adj = apply_kt_adjoint(t, psi, f, cfg);
  RealField re(cfg.grid);
  for (int j = 0; j < cfg.grid.size(); ++j)
    re.values[j] = adj.values[j].real();
  if (noise_h)
    re = mollify_field(re, *noise_h);
  return re;
}

double real_inner(const RealField& a, const RealField& b)
{
  double acc = 0.0;
  for (std::size_t j = 0; j < a.values.size(); ++j)
    acc += a.values[j] * b.values[j];
  return acc * a.grid.dx();
}

GridField divide_by_i(const GridField& f) { return cplx(0.0, -1.0) * f; }

} // namespace

CovariancePair exact_covariance(double t, const Trajectory& psi, const GridField& f,
                                const GridField& g, const SolverConfig& cfg,
                                std::optional<double> noise_h)
{
  // Re<f, phi> = <Re K* f, xi> and Im<f, phi> = Re<f/i, phi>.
  const RealField af = noise_response(t, psi, f, cfg, noise_h);
  const RealField bf = noise_response(t, psi, divide_by_i(f), cfg, noise_h);
  const RealField ag = noise_response(t, psi, g, cfg, noise_h);
  const RealField bg = noise_response(t, psi, divide_by_i(g), cfg, noise_h);

  const double aa = real_inner(af, ag);
  const double bb = real_inner(bf, bg);
  const double ba = real_inner(bf, ag);
  const double ab = real_inner(af, bg);
  return {{aa + bb, ba - ab}, {aa - bb, ba + ab}};
}

double characteristic_exponent(double t, const Trajectory& psi, const GridField& f,
                               const SolverConfig& cfg, std::optional<double> noise_h)
{
  const RealField a = noise_response(t, psi, f, cfg, noise_h);
  return real_inner(a, a);
}

CovariancePair covariance_by_polarization(double t, const Trajectory& psi, const GridField& f,
                                          const GridField& g, const SolverConfig& cfg,
                                          std::optional<double> noise_h)
{
  auto V = [&](const GridField& h) { return characteristic_exponent(t, psi, h, cfg, noise_h); };
  auto cross = [&](const GridField& x, const GridField& y) { return 0.25 * (V(x + y) - V(x - y)); };
  const GridField fi = divide_by_i(f);
  const GridField gi = divide_by_i(g);
  const double aa = cross(f, g);
  const double bb = cross(fi, gi);
  const double ba = cross(fi, g);
  const double ab = cross(f, gi);
  return {{aa + bb, ba - ab}, {aa - bb, ba + ab}};
}

} // namespace sprinkle
