#include "sprinkle/nls.hpp"
#include "sprinkle/errors.hpp"

#include "free_flow.hpp"

#include <algorithm>
#include <cmath>

namespace sprinkle {

void SolverConfig::validate() const
{
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw ValidationError("dt must be positive");
  if (!std::isfinite(T) || !std::isfinite(t0))
    throw ValidationError("time interval must be finite");
  if (dt > std::abs(T - t0) && T != t0)
    throw ValidationError("dt must not exceed the integration interval");
  if (store_every < 1)
    throw ValidationError("store_every must be >= 1");
  if (!(max_phase > 0.0))
    throw ValidationError("max_phase must be positive");
}

int SolverConfig::steps() const
{
  const double span = std::abs(T - t0);
  if (span == 0.0)
    return 0;
  return std::max(1, static_cast<int>(std::ceil(span / dt - 1e-9)));
}

double SolverConfig::signed_step() const
{
  const int n = steps();
  return n == 0 ? 0.0 : (T - t0) / n;
}

bool Trajectory::covers(double a, double b) const
{
  if (times.empty())
    return false;
  const auto [lo, hi] = std::minmax_element(times.begin(), times.end());
  const double tol = 1e-12 * std::max(1.0, std::abs(*hi - *lo));
  return std::min(a, b) >= *lo - tol && std::max(a, b) <= *hi + tol;
}

GridField Trajectory::state_at(double t) const
{
  if (!covers(t, t))
    throw CoverageError("time outside the stored trajectory");
  if (times.size() == 1)
    return states.front();
  const bool increasing = times.back() > times.front();
  // Locate segment [i, i+1] containing t.
  std::size_t i = 0;
  if (increasing) {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    i = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
  } else {
    auto it = std::upper_bound(times.begin(), times.end(), t, std::greater<>());
    i = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
  }
  i = std::min(i, times.size() - 2);
  const double t0 = times[i], t1 = times[i + 1];
  const double theta = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
  if (theta == 0.0)
    return states[i];
  if (theta == 1.0)
    return states[i + 1];
  GridField out = states[i];
  for (std::size_t j = 0; j < out.values.size(); ++j)
    out.values[j] = (1.0 - theta) * states[i].values[j] + theta * states[i + 1].values[j];
  return out;
}

double mass(const GridField& psi)
{
  const double n = l2_norm(psi);
  return n * n;
}

double energy_measure(const GridField& psi, std::span<const double> density)
{
  const GridField d = derivative(psi);
  double kinetic = 0.0, potential = 0.0;
  for (std::size_t j = 0; j < psi.values.size(); ++j) {
    kinetic += std::norm(d.values[j]);
    const double a = std::norm(psi.values[j]);
    potential += a * a * density[j];
  }
  return 0.5 * (kinetic + potential) * psi.grid.dx();
}

double energy_measure(const GridField& psi, const SampledMeasure& mu)
{
  return energy_measure(psi, mu.cell_density);
}

double energy(const GridField& psi)
{
  const std::vector<double> ones(psi.values.size(), 1.0);
  return energy_measure(psi, ones);
}

namespace {

bool all_finite(const GridField& f)
{
  for (const auto& v : f.values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      return false;
  return true;
}

void record(Trajectory& traj, double t, const GridField& psi, std::span<const double> density)
{
  traj.times.push_back(t);
  traj.states.push_back(psi);
  traj.mass.push_back(mass(psi));
  traj.energy.push_back(energy_measure(psi, density));
}

} // namespace

Trajectory solve_nls_measure(const GridField& psi0, std::span<const double> density,
                             const SolverConfig& cfg)
{
  cfg.validate();
  if (!(psi0.grid == cfg.grid) || density.size() != psi0.values.size())
    throw ValidationError("initial data, density and solver grid must agree");
  if (!all_finite(psi0))
    throw ValidationError("initial data must be finite");
  for (double w : density)
    if (!std::isfinite(w))
      throw ValidationError("measure density must be finite");

  detail::FreeFlow flow(cfg.grid, cfg.dealias);
  const int n = cfg.steps();
  const double h = cfg.signed_step();
  const double wmax = *std::max_element(density.begin(), density.end());

  Trajectory traj;
  traj.grid = cfg.grid;
  GridField psi = psi0;
  record(traj, cfg.t0, psi, density);

  for (int step = 0; step < n; ++step) {
    double amax = 0.0;
    for (const auto& v : psi.values)
      amax = std::max(amax, std::norm(v));
    const double phase = 2.0 * std::max(wmax, 0.0) * amax * std::abs(h);
    if (!std::isfinite(phase))
      throw DivergenceError("nonlinear phase overflow in NLS solve", traj.times.back());
    const int sub = std::max(1, static_cast<int>(std::ceil(phase / cfg.max_phase - 1e-12)));
    const double tau = h / sub;
    for (int s = 0; s < sub; ++s) {
      flow.apply(psi.values, 0.5 * tau);
      for (std::size_t j = 0; j < psi.values.size(); ++j) {
        const double rot = -2.0 * density[j] * std::norm(psi.values[j]) * tau;
        psi.values[j] *= std::polar(1.0, rot);
      }
      flow.apply(psi.values, 0.5 * tau);
    }
    const double t = cfg.t0 + (step + 1) * h;
    if (!all_finite(psi))
      throw DivergenceError("non-finite state in NLS solve", traj.times.back());
    if ((step + 1) % cfg.store_every == 0 || step + 1 == n)
      record(traj, step + 1 == n ? cfg.T : t, psi, density);
  }
  return traj;
}

Trajectory solve_nls_measure(const GridField& psi0, const SampledMeasure& mu,
                             const SolverConfig& cfg)
{
  return solve_nls_measure(psi0, mu.cell_density, cfg);
}

Trajectory solve_nls_measure(const GridField& psi0, const MollifiedMeasure& mu,
                             const SolverConfig& cfg)
{
  return solve_nls_measure(psi0, mu.density, cfg);
}

Trajectory solve_nls(const GridField& psi0, const SolverConfig& cfg)
{
  const std::vector<double> ones(static_cast<std::size_t>(cfg.grid.size()), 1.0);
  return solve_nls_measure(psi0, ones, cfg);
}

double leakage(const Trajectory& traj)
{
  const double base = l2_norm(traj.states.front());
  if (base == 0.0)
    return 0.0;
  const double R = 0.25 * traj.grid.length();
  double worst = 0.0;
  for (const auto& psi : traj.states) {
    double acc = 0.0;
    for (int j = 0; j < psi.grid.size(); ++j) {
      const double outside = 1.0 - chi(psi.grid.x(j) / R);
      acc += outside * outside * std::norm(psi.values[j]);
    }
    worst = std::max(worst, std::sqrt(acc * psi.grid.dx()));
  }
  return worst / base;
}

DifferenceTable difference_norms(const Trajectory& a, const Trajectory& b,
                                 const std::vector<double>& s_list)
{
  if (!(a.grid == b.grid))
    throw AlignmentError("trajectories live on different grids");
  if (a.times.size() != b.times.size())
    throw AlignmentError("trajectories have different numbers of stored times");
  for (std::size_t i = 0; i < a.times.size(); ++i)
    if (std::abs(a.times[i] - b.times[i]) > 1e-12 * std::max(1.0, std::abs(a.times[i])))
      throw AlignmentError("trajectories are stored at different times");

  DifferenceTable table;
  table.s_list = s_list;
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    const GridField diff = a.states[i] - b.states[i];
    DifferenceRow row;
    row.t = a.times[i];
    row.h_minus1 = sobolev_norm(diff, -1.0);
    row.linf = linf_norm(diff);
    row.h1 = sobolev_norm(diff, 1.0);
    const double na = sobolev_norm(a.states[i], 1.0);
    const double nb = sobolev_norm(b.states[i], 1.0);
    row.h1_sq_gap = std::abs(na * na - nb * nb);
    for (double s : s_list)
      row.h_minus_s.push_back(sobolev_norm(diff, -s));
    table.rows.push_back(row);

    DifferenceRow sup = row;
    if (!table.running.empty()) {
      const DifferenceRow& prev = table.running.back();
      sup.h_minus1 = std::max(sup.h_minus1, prev.h_minus1);
      sup.linf = std::max(sup.linf, prev.linf);
      sup.h1 = std::max(sup.h1, prev.h1);
      sup.h1_sq_gap = std::max(sup.h1_sq_gap, prev.h1_sq_gap);
      for (std::size_t k = 0; k < sup.h_minus_s.size(); ++k)
        sup.h_minus_s[k] = std::max(sup.h_minus_s[k], prev.h_minus_s[k]);
    }
    table.running.push_back(sup);
  }
  return table;
}

} // namespace sprinkle
