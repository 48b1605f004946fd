#pragma once

#include "sprinkle/grid.hpp"
#include "sprinkle/levy.hpp"
#include "sprinkle/stats.hpp"

#include <cstdint>
#include <vector>

namespace sprinkle {

/// Dyadic index (N, k) with interval I_{N,k} = [k/N, (k+1)/N).
/// e_{1,k} is the indicator of I_{1,k}; for N >= 2,
/// e_{N,k} = sqrt(N/2) (1_{I_{N,2k}} - 1_{I_{N,2k+1}}).
struct HaarIndex {
  int N = 1;
  int k = 0;

  /// Support [lo, hi) of e_{N,k}.
  double support_lo() const noexcept;
  double support_hi() const noexcept;
  double value(double x) const noexcept;
  /// int e_{N,k} dx.
  double integral() const noexcept;

  bool operator==(const HaarIndex&) const = default;
};

struct HaarCoefficient {
  HaarIndex index;
  double value = 0.0;
};

/// e_{N,k} sampled at cell midpoints. Requires 1/N >= 2 dx.
RealField haar_function(const HaarIndex& idx, const Grid& grid);

/// X_{N,k} = int e dmu - int e dx, exact over atoms.
HaarCoefficient haar_coefficient(const SampledMeasure& mu, const HaarIndex& idx);

/// int prod_j e_{N_j,k_j} dx, exact on the dyadic lattice.
double haar_product_integral(const std::vector<HaarIndex>& indices);

/// kappa(X_1, ..., X_J) = (-eps)^{J-1} Phi^{(J)}(0) int prod e dx.
double exact_joint_cumulant(const LevySpec& spec, double epsilon,
                            const std::vector<HaarIndex>& indices);

/// Joint cumulant of the columns of `samples` (row-major, `width` columns,
/// width <= 4) via the moment-cumulant formula, with a grouped jackknife for
/// bias correction and standard error.
Estimate joint_cumulant_estimate(const std::vector<double>& samples, int width, int groups = 200);

struct CumulantReport {
  std::vector<HaarIndex> indices;
  double exact = 0.0;
  Estimate estimate;
};

/// Monte Carlo estimate of kappa(X_{i_1}, ..., X_{i_J}) for J <= 4.
CumulantReport empirical_cumulants(const LevySpec& spec, double epsilon,
                                   const std::vector<HaarIndex>& indices, const Grid& grid,
                                   std::size_t replicas, std::uint64_t seed);

/// Samples X_{N,k} for each index across replicas; row r holds replica r.
std::vector<double> sample_haar_coefficients(const LevySpec& spec, double epsilon,
                                             const std::vector<HaarIndex>& indices,
                                             const Grid& grid, std::size_t replicas,
                                             std::uint64_t seed);

/// Monte Carlo estimate of E || psi (dmu - 1) ||_{H^{-s}}^{2p}, using the
/// deposited grid density.
Estimate weighted_negative_norm_moment(const LevySpec& spec, double epsilon, const GridField& psi,
                                       double s, int p, std::size_t replicas, std::uint64_t seed);

} // namespace sprinkle
