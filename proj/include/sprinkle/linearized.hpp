#pragma once

#include "sprinkle/grid.hpp"
#include "sprinkle/nls.hpp"
#include "sprinkle/rng.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace sprinkle {

/// Dense real-linear map on stacked (Re u, Im u) vectors of length 2M,
/// row-major. Column j < M is the image of the real unit vector at node j,
/// column M + j the image of i times it.
struct RealLinearOperator {
  Grid grid;
  double t = 0.0;
  double tau = 0.0;
  int dim = 0; ///< 2M
  std::vector<double> entries;

  double& operator()(int r, int c) { return entries[static_cast<std::size_t>(r) * dim + c]; }
  double operator()(int r, int c) const { return entries[static_cast<std::size_t>(r) * dim + c]; }

  GridField apply(const GridField& u) const;
  GridField apply_transpose(const GridField& u) const;
  RealLinearOperator transpose() const;
  /// Largest singular value, by power iteration on A^T A.
  double norm2(int iterations = 200) const;

  /// Binary layout: magic "SPRKOP01", int32 dim, int32 M, float64 L, t, tau,
  /// then dim*dim float64 entries row-major, all little-endian.
  void write_binary(std::ostream& os) const;
  static RealLinearOperator read_binary(std::istream& is);
};

std::vector<double> stack(const GridField& u);
GridField unstack(const Grid& grid, const std::vector<double>& v);

/// u(t) = S(t, tau) u0 for i u_t = -u_xx + 4|psi|^2 u + 2 psi^2 conj(u), by
/// Strang splitting: exact free half-steps around the exact pointwise flow of
/// the potential part with psi frozen at the step midpoint.
GridField propagate_linearized(const GridField& u0, double tau, double t, const Trajectory& psi,
                               const SolverConfig& cfg);

/// Dense S(t, tau). Requires M <= 512.
RealLinearOperator assemble_operator(double tau, double t, const Trajectory& psi,
                                     const SolverConfig& cfg);

/// phi(t) = int_0^t S(t, s) [(2/i) |psi|^2 psi f] ds for a complex profile f,
/// stored every cfg.store_every steps from t = 0 to cfg.T.
Trajectory solve_forced(const Trajectory& psi, const GridField& forcing, const SolverConfig& cfg);

struct WhiteNoiseSample {
  Grid grid;
  std::vector<double> values;
  std::optional<double> h;

  RealField field() const { return RealField(grid, values); }
};

/// I.i.d. N(0, 1/dx) per node; when h is given the sample is convolved with
/// the unit-mass bump at scale h.
WhiteNoiseSample sample_white_noise(const Grid& grid, Rng& rng, std::optional<double> h = {});

/// zeta^h * f with the same discrete kernel used for the noise.
RealField mollify_field(const RealField& f, double h);

/// Fluctuation field forced by white noise, phi(0) = 0.
Trajectory solve_fluctuation(const Trajectory& psi, const WhiteNoiseSample& xi,
                             const SolverConfig& cfg);

/// K_t f = int_0^t S(t, s)[(2/i)|psi|^2 psi f] ds.
GridField apply_kt(double t, const Trajectory& psi, const GridField& f, const SolverConfig& cfg);

/// K_t^* g for the pairing Re<f, g>: the exact transpose of the discrete
/// K_t, evaluated by one backward sweep. The real part is the action on
/// real noise profiles.
GridField apply_kt_adjoint(double t, const Trajectory& psi, const GridField& g,
                           const SolverConfig& cfg);

/// Dense K_t. Requires M <= 512.
RealLinearOperator kt_operator(double t, const Trajectory& psi, const SolverConfig& cfg);

struct CovariancePair {
  cplx covariance;        ///< E <f,phi> conj(<g,phi>)
  cplx pseudo_covariance; ///< E <f,phi> <g,phi>
};

/// Covariance and pseudo-covariance of <f, phi(t)> and <g, phi(t)>, with
/// <f, g> = int f conj(g) dx. `noise_h` selects mollified noise zeta^h * xi.
CovariancePair exact_covariance(double t, const Trajectory& psi, const GridField& f,
                                const GridField& g, const SolverConfig& cfg,
                                std::optional<double> noise_h = {});

/// ||Re K_t^* f||_{L^2}^2, so that E exp(i Re<f, phi(t)>) = exp(-value / 2).
double characteristic_exponent(double t, const Trajectory& psi, const GridField& f,
                               const SolverConfig& cfg, std::optional<double> noise_h = {});

/// The same pair rebuilt from characteristic_exponent by polarization.
CovariancePair covariance_by_polarization(double t, const Trajectory& psi, const GridField& f,
                                          const GridField& g, const SolverConfig& cfg,
                                          std::optional<double> noise_h = {});

} // namespace sprinkle
