#pragma once

#include "sprinkle/grid.hpp"
#include "sprinkle/haar.hpp"
#include "sprinkle/levy.hpp"
#include "sprinkle/nls.hpp"
#include "sprinkle/stats.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sprinkle {

enum class ProfileShape { Gaussian, GaussianCos, Sech };

std::string to_string(ProfileShape shape);

/// Named analytic profile:
///   gaussian      A exp(-(x-c)^2 / (2 w^2)) exp(i (k x + phase))
///   gaussian_cos  A exp(-(x-c)^2 / (2 w^2)) cos(k x) exp(i phase)
///   sech          A sech((x-c) / w) exp(i (k x + phase))
struct ProfileSpec {
  ProfileShape shape = ProfileShape::Gaussian;
  double amplitude = 1.0;
  double center = 0.0;
  double width = 1.0;
  double wavenumber = 0.0;
  double phase = 0.0;

  cplx value(double x) const;
  GridField sample(const Grid& grid) const;
  /// Real part on the grid.
  RealField sample_real(const Grid& grid) const;
};

struct HaarSettings {
  std::vector<HaarIndex> indices;
  /// Each entry lists positions into `indices`, orders 2 to 4.
  std::vector<std::vector<int>> cumulants;
  double moment_s = 0.75;
  std::size_t moment_replicas = 0; ///< 0 disables the negative-norm moment study
};

struct ExperimentConfig {
  LevySpec spec;
  /// Degenerate choice mu = Lebesgue for every epsilon.
  bool lebesgue = false;
  std::vector<double> epsilons;
  Grid grid{64.0, 512};
  double dt = 1e-3;
  int store_every = 10;
  bool dealias = false;
  ProfileSpec initial;
  double T = 1.0;
  double s = 0.75;
  std::size_t replicas = 1;
  std::uint64_t master_seed = 0;
  std::vector<double> h_list;
  std::vector<ProfileSpec> profiles;
  std::vector<double> thetas;
  HaarSettings haar;
  double leakage_tolerance = 1e-2;
  std::string output_dir = "results";

  SolverConfig solver() const;
  /// Throws ConfigError (line 0) on violated invariants.
  void validate() const;
};

/// Parses the YAML config text. Errors are ConfigErrors carrying the 1-based
/// line of the offending entry.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

struct Record {
  double epsilon = 0.0;
  std::optional<double> h;
  std::size_t replica = 0;
  std::vector<std::pair<std::string, double>> values;
};

struct Aggregate {
  std::string metric;
  double epsilon = 0.0;
  std::optional<double> h;
  Estimate estimate;
  /// Deterministic oracle value, when one exists.
  std::optional<double> reference;
};

struct SlopeFit {
  std::string metric;
  std::optional<double> h;
  LineFit fit;
  std::size_t points = 0;
};

struct EnsembleResult {
  std::string experiment;
  std::vector<Record> records;
  std::vector<Aggregate> aggregates;
  std::vector<SlopeFit> slopes;

  /// Throws std::out_of_range when absent.
  const Aggregate& aggregate(std::string_view metric, double epsilon,
                             std::optional<double> h = {}) const;
  const SlopeFit& slope(std::string_view metric, std::optional<double> h = {}) const;
};

/// Draws mu_n for replica `replica` at epsilon index `eps_index`. The stream
/// depends only on (master_seed, eps_index, replica), so different
/// experiments and different h values share common random numbers.
SampledMeasure draw_measure(const ExperimentConfig& cfg, std::size_t eps_index,
                            std::size_t replica);

/// Atom counts, masses and empirical Laplace functionals of the real parts
/// of the configured profiles against laplace_functional_exact.
EnsembleResult run_sample_measure(const ExperimentConfig& cfg);

/// One solve per epsilon (replica 0) with per-time diagnostics against the
/// homogenized flow.
EnsembleResult run_solve(const ExperimentConfig& cfg);

/// sup_t differences psi_n - psi in H^{-1}, L^inf, H^1 and H^{-s}, first and
/// second moments per epsilon, log-log slopes of the first moments.
/// Throws ExperimentError when the leakage guard trips.
EnsembleResult run_homogenization(const ExperimentConfig& cfg);

/// Empirical characteristic function of (int F dmu - int F dx)/sqrt(eps)
/// against the exact functional and the Gaussian limit. F is the real part
/// of the profile.
EnsembleResult run_clt_linear(const ExperimentConfig& cfg, const ProfileSpec& F);

/// <f, phi_n(T)> for each profile: means, covariances and pseudo-covariances
/// against exact_covariance, characteristic functions, normality, and the
/// law of sup_t ||phi_n||_{H^{-s}} against the white-noise driven field.
EnsembleResult run_fluctuations(const ExperimentConfig& cfg,
                                const std::vector<ProfileSpec>& profiles);

/// Homogenization and fluctuation metrics with mu_n replaced by its
/// mollification at each h, plus the max over h and relative spread.
EnsembleResult run_mollified(const ExperimentConfig& cfg);

/// Haar Gram matrix, joint cumulants and negative-norm moment scaling.
EnsembleResult run_haar_stats(const ExperimentConfig& cfg);

/// One JSON object per line: records first, then aggregates, then slopes.
void write_jsonl(std::ostream& os, const EnsembleResult& result);
/// kind,metric,epsilon,h,mean,se,count,reference
void write_summary_csv(std::ostream& os, const EnsembleResult& result);

struct Manifest {
  std::string subcommand;
  std::string config_hash; ///< FNV-1a of the config bytes, 16 hex digits
  std::uint64_t master_seed = 0;
  std::string code_version;
};

void write_manifest(std::ostream& os, const Manifest& manifest);

/// Writes results.jsonl, summary.csv, manifest.json and a verbatim copy of
/// the config (config.yaml) into `dir`, creating it if needed.
void write_result_directory(const std::string& dir, const EnsembleResult& result,
                            const Manifest& manifest, const std::string& config_text);

std::string code_version();

} // namespace sprinkle
