#pragma once

#include "sprinkle/grid.hpp"
#include "sprinkle/levy.hpp"

#include <span>
#include <vector>

namespace sprinkle {

struct SolverConfig {
  Grid grid;
  double dt = 1e-3;       ///< step size magnitude
  double T = 1.0;         ///< final time; negative values integrate backwards
  double t0 = 0.0;        ///< initial time
  int store_every = 1;    ///< keep every n-th step (the final step is always kept)
  bool dealias = false;   ///< 2/3-rule spectral truncation in the linear substep
  double max_phase = 0.1; ///< largest nonlinear phase per step before substepping

  void validate() const;
  /// Number of steps and signed step size covering [t0, T].
  int steps() const;
  double signed_step() const;
};

struct Trajectory {
  Grid grid;
  std::vector<double> times;
  std::vector<GridField> states;
  std::vector<double> mass;
  std::vector<double> energy;

  std::size_t size() const noexcept { return times.size(); }
  const GridField& final_state() const { return states.back(); }
  /// Linear interpolation between stored snapshots. Throws CoverageError
  /// outside [min time, max time].
  GridField state_at(double t) const;
  bool covers(double a, double b) const;
};

double mass(const GridField& psi);

/// E_n[psi] = 1/2 int |psi_x|^2 dx + 1/2 int |psi|^4 w dx for node density w.
double energy_measure(const GridField& psi, std::span<const double> density);
double energy_measure(const GridField& psi, const SampledMeasure& mu);
/// Homogenized energy, w = 1.
double energy(const GridField& psi);

/// Strang splitting for i psi_t = -psi_xx + 2 |psi|^2 psi w(x): exact free
/// half-steps in Fourier space around an exact pointwise phase rotation.
Trajectory solve_nls_measure(const GridField& psi0, std::span<const double> density,
                             const SolverConfig& cfg);
Trajectory solve_nls_measure(const GridField& psi0, const SampledMeasure& mu,
                             const SolverConfig& cfg);
Trajectory solve_nls_measure(const GridField& psi0, const MollifiedMeasure& mu,
                             const SolverConfig& cfg);
/// Cubic NLS, w = 1.
Trajectory solve_nls(const GridField& psi0, const SolverConfig& cfg);

/// sup_t || (1 - chi_{L/4}) psi(t) ||_{L^2} / || psi(0) ||_{L^2}.
double leakage(const Trajectory& traj);

struct DifferenceRow {
  double t = 0.0;
  double h_minus1 = 0.0;  ///< ||a - b||_{H^{-1}}
  double linf = 0.0;      ///< ||a - b||_{L^inf}
  double h1 = 0.0;        ///< ||a - b||_{H^1}
  double h1_sq_gap = 0.0; ///< | ||a||_{H^1}^2 - ||b||_{H^1}^2 |
  std::vector<double> h_minus_s;
};

struct DifferenceTable {
  std::vector<double> s_list;
  std::vector<DifferenceRow> rows;      ///< values at each stored time
  std::vector<DifferenceRow> running;   ///< running sup up to each stored time

  const DifferenceRow& sup() const { return running.back(); }
};

/// Norms of trajA - trajB at every shared stored time plus their running
/// sups. Throws AlignmentError when grids or time stamps differ.
DifferenceTable difference_norms(const Trajectory& a, const Trajectory& b,
                                 const std::vector<double>& s_list = {});

} // namespace sprinkle
