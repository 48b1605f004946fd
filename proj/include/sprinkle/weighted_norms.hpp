#pragma once

#include "sprinkle/grid.hpp"
#include "sprinkle/levy.hpp"

#include <vector>

namespace sprinkle {

/// Nonnegative sequence Z(k), k = first, ..., first + size - 1, periodized
/// over the torus (one entry per unit cell [k - 1/2, k + 1/2)).
struct WeightSequence {
  int first = 0;
  std::vector<double> values;

  int size() const noexcept { return static_cast<int>(values.size()); }
  double at(int k) const;
};

struct EnvelopeWeight {
  WeightSequence source;
  std::vector<double> envelope_squared; ///< N(k;Z)^2, same indexing as source
  RealField weight;                     ///< omega(x;Z) on the grid nodes

  double envelope_squared_at(int k) const;
};

/// Integer cell indices covering a torus of integer length: -L/2, ..., L/2 - 1.
WeightSequence zero_sequence(const Grid& grid);

/// N(k)^2 = 4 + max_l [Z(l)^2 - |k - l|] with torus distance, and the
/// piecewise-linear interpolant omega(x;Z) of N(k)^2 between integers.
EnvelopeWeight envelope(const WeightSequence& Z, const Grid& grid);

/// ||f||_{L^2_Z} = (int |f|^2 omega(x;Z) dx)^{1/2}.
double weighted_l2_norm(const GridField& f, const EnvelopeWeight& env);
double weighted_l2_norm(const GridField& f, const WeightSequence& Z);

/// Z_n(k) = mu([k - 1/2, k + 1/2)).
WeightSequence cell_masses(const SampledMeasure& mu);

/// Z_{n,s}(k) = || rho_k (density - 1) / sqrt(eps) ||_{H^{-s}}.
WeightSequence fluctuation_weights(const SampledMeasure& mu, double s);
WeightSequence fluctuation_weights(const Grid& grid, const std::vector<double>& density,
                                   double epsilon, double s);

double xn1_norm(const GridField& f, const SampledMeasure& mu);
double yns1_norm(const GridField& f, const SampledMeasure& mu, double s);

} // namespace sprinkle
