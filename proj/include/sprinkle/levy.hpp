#pragma once

#include "sprinkle/grid.hpp"
#include "sprinkle/rng.hpp"

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

namespace sprinkle {

enum class LevyKind { Poisson, CompoundPoisson, Gamma };

std::string to_string(LevyKind kind);
LevyKind levy_kind_from_string(const std::string& name);

struct Jump {
  double size;
  double probability;
};

/// A stationary unit-intensity random measure with independent increments,
/// described by its Levy measure Lambda on (0, inf):
///   Poisson          Lambda = delta_1
///   CompoundPoisson  Lambda = rate * sum_i p_i delta_{s_i}
///   Gamma            Lambda(ds) = s^{-1} e^{-s} ds
/// `a` is the declared exponential-moment radius, int s e^{as} dLambda < inf.
struct LevySpec {
  LevyKind kind = LevyKind::Poisson;
  std::vector<Jump> jumps;
  double rate = 1.0;
  double a = 1.0;

  static LevySpec poisson(double a = 1.0);
  /// Compound Poisson with the rate chosen so that int s^2 dLambda = 1.
  static LevySpec compound_poisson(std::vector<Jump> jumps, double a = 1.0);
  static LevySpec gamma(double a = 0.5);

  /// Throws ValidationError unless 0 < m1 <= 1, m2 = 1 and the exponential
  /// moment at `a` is finite.
  void validate() const;

  /// int s^order dLambda.
  double moment(int order) const;
  /// Lebesgue component 1 - m1 of the sampled measure.
  double lebesgue_density() const { return 1.0 - moment(1); }
  double max_jump() const;
};

/// Phi(z) = int (1 - s z - e^{-s z}) dLambda(s), for Re z > -a.
cplx phi_eval(const LevySpec& spec, cplx z);

/// d^J Phi / dz^J at z = 0.
double phi_derivative(const LevySpec& spec, int order);

struct Atom {
  double position;
  double weight;
};

/// One realization of mu_n on the torus: Lebesgue part c plus atoms, with
/// the atoms deposited onto grid nodes by linear (cloud-in-cell) weighting.
struct SampledMeasure {
  Grid grid;
  double epsilon = 1.0;
  double lebesgue = 0.0;
  std::vector<Atom> atoms;
  std::vector<double> cell_density;

  double total_mass() const;
  double deposited_mass() const;
  /// mu([lo, hi)) by exact atom membership, lo <= hi, interval taken on the torus.
  double mass_in(double lo, double hi) const;
  /// int f dmu with f read as constant on each cell [x_j, x_j + dx).
  double integrate_cellwise(const RealField& f) const;
};

/// Builds a measure from explicit atoms and deposits them.
SampledMeasure make_measure(const Grid& grid, double epsilon, double lebesgue,
                            std::vector<Atom> atoms);
SampledMeasure lebesgue_measure(const Grid& grid);
std::vector<double> deposit(const Grid& grid, double lebesgue, const std::vector<Atom>& atoms);

/// Draws mu_n at scale epsilon. Poisson kinds place atoms of weight eps*s at
/// rate Lambda((0,inf))/eps; the Gamma kind draws Gamma(dx/eps, eps) masses per
/// cell, placed at cell midpoints.
SampledMeasure sample(const LevySpec& spec, double epsilon, const Grid& grid, Rng& rng);

/// exp(-(1/eps) int Phi(eps f) + eps f dx), f piecewise constant on cells.
double laplace_functional_exact(const LevySpec& spec, double epsilon, const RealField& f);

/// E exp(i theta (int F dmu - int F dx)/sqrt(eps)) = exp(-(1/eps) int Phi(-i theta sqrt(eps) F)).
cplx characteristic_functional_exact(const LevySpec& spec, double epsilon, const RealField& F,
                                     double theta = 1.0);

/// Gaussian limit exp(-theta^2 ||F||^2 / 2).
double characteristic_functional_limit(const RealField& F, double theta = 1.0);

struct MollifiedMeasure {
  SampledMeasure base;
  double h = 1.0;
  std::vector<double> density;

  double total_mass() const;
};

/// Node values of zeta^h * mu with zeta the unit-mass bump on (-1,1). The
/// discrete kernel is renormalized per atom so mass is preserved exactly.
MollifiedMeasure mollify(const SampledMeasure& measure, double h);

/// Header line `# c=...,epsilon=...,L=...` followed by position,weight rows.
void write_csv(std::ostream& os, const SampledMeasure& measure);

} // namespace sprinkle
