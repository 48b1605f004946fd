#include "sprinkle/experiments.hpp"
#include "sprinkle/errors.hpp"
#include "sprinkle/linearized.hpp"
#include "sprinkle/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sprinkle {

namespace {

// Stream layout under master_seed: measures use 1 + eps_index, white noise
// 1001 + eps_index, Haar studies 2001 + eps_index.
constexpr std::uint64_t kNoiseStream = 1001;
constexpr std::uint64_t kHaarStream = 2001;
constexpr std::uint64_t kMomentStream = 3001;

std::string fmt(double v)
{
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::string pair_tag(std::size_t p, std::size_t q)
{
  return "[f" + std::to_string(p) + ",f" + std::to_string(q) + "]";
}

std::string index_list(const std::vector<int>& positions)
{
  std::string s = "[";
  for (std::size_t i = 0; i < positions.size(); ++i)
    s += (i ? "," : "") + std::to_string(positions[i]);
  return s + "]";
}

Aggregate make_aggregate(std::string metric, double eps, std::optional<double> h,
                         const std::vector<double>& xs, std::optional<double> reference = {})
{
  return {std::move(metric), eps, h, mean_se(xs), reference};
}

Aggregate exact_value(std::string metric, double eps, std::optional<double> h, double value,
                      std::size_t count = 1)
{
  Aggregate a{std::move(metric), eps, h, {}, {}};
  a.estimate.mean = value;
  a.estimate.count = count;
  return a;
}

double max_relative_drift(const std::vector<double>& v)
{
  double d = 0.0;
  const double ref = v.front();
  for (double x : v)
    d = std::max(d, ref != 0.0 ? std::abs(x / ref - 1.0) : std::abs(x));
  return d;
}

double sup_negative_norm(const Trajectory& traj, double s)
{
  double out = 0.0;
  for (const auto& st : traj.states)
    out = std::max(out, sobolev_norm(st, -s));
  return out;
}

void guard_leakage(const ExperimentConfig& cfg, const Trajectory& traj, const std::string& what)
{
  const double leak = leakage(traj);
  if (leak > cfg.leakage_tolerance)
    throw ExperimentError("leakage guard: " + what + " carries " + fmt(leak) +
                          " of its L2 mass outside |x| < L/4 (tolerance " +
                          fmt(cfg.leakage_tolerance) + "); enlarge grid.length or shorten T");
}

Trajectory reference_flow(const ExperimentConfig& cfg)
{
  cfg.validate();
  Trajectory ref = solve_nls(cfg.initial.sample(cfg.grid), cfg.solver());
  guard_leakage(cfg, ref, "homogenized flow");
  return ref;
}

/// Fits log(mean) against log(eps) for every metric whose means are all
/// positive across the epsilon list.
void add_slopes(EnsembleResult& out, const std::vector<double>& eps,
                const std::vector<std::string>& metrics, std::optional<double> h = {})
{
  if (eps.size() < 2)
    return;
  for (const auto& m : metrics) {
    std::vector<double> x, y;
    for (double e : eps) {
      const double v = out.aggregate(m, e, h).estimate.mean;
      if (!(v > 0.0))
        break;
      x.push_back(std::log(e));
      y.push_back(std::log(v));
    }
    if (x.size() == eps.size())
      out.slopes.push_back({m, h, fit_line(x, y), x.size()});
  }
}

struct HomogenizationSample {
  DifferenceRow sup;
  double leakage = 0.0;
  double mass_drift = 0.0;
  double energy_drift = 0.0;
  std::vector<cplx> z; ///< <f_p, phi_n(T)>
};

HomogenizationSample homogenization_sample(const ExperimentConfig& cfg, const Trajectory& ref,
                                           const GridField& psi0,
                                           std::span<const double> density, double eps,
                                           const std::vector<GridField>& profiles,
                                           const std::string& label)
{
  const Trajectory traj = solve_nls_measure(psi0, density, cfg.solver());
  HomogenizationSample out;
  out.leakage = leakage(traj);
  if (out.leakage > cfg.leakage_tolerance)
    guard_leakage(cfg, traj, label);
  out.sup = difference_norms(traj, ref, {cfg.s}).sup();
  out.mass_drift = max_relative_drift(traj.mass);
  out.energy_drift = max_relative_drift(traj.energy);
  if (!profiles.empty()) {
    GridField phi = traj.final_state() - ref.final_state();
    phi *= 1.0 / std::sqrt(eps);
    for (const auto& f : profiles)
      out.z.push_back(inner(f, phi));
  }
  return out;
}

const std::vector<std::string> kHomogenizationMetrics = {"h_minus1", "linf", "h1", "h_minus_s"};

void emit_homogenization(EnsembleResult& out, double eps, std::optional<double> h,
                         const std::vector<HomogenizationSample>& samples)
{
  const std::size_t R = samples.size();
  std::vector<std::vector<double>> cols(kHomogenizationMetrics.size(), std::vector<double>(R));
  std::vector<double> leak(R), mdrift(R), edrift(R), gap(R);
  for (std::size_t r = 0; r < R; ++r) {
    const auto& s = samples[r];
    const double vals[] = {s.sup.h_minus1, s.sup.linf, s.sup.h1, s.sup.h_minus_s.at(0)};
    Record rec{eps, h, r, {}};
    for (std::size_t m = 0; m < cols.size(); ++m) {
      cols[m][r] = vals[m];
      rec.values.emplace_back(kHomogenizationMetrics[m], vals[m]);
    }
    gap[r] = s.sup.h1_sq_gap;
    leak[r] = s.leakage;
    mdrift[r] = s.mass_drift;
    edrift[r] = s.energy_drift;
    rec.values.emplace_back("h1_sq_gap", gap[r]);
    rec.values.emplace_back("leakage", leak[r]);
    rec.values.emplace_back("mass_drift", mdrift[r]);
    rec.values.emplace_back("energy_drift", edrift[r]);
    out.records.push_back(std::move(rec));
  }
  for (std::size_t m = 0; m < cols.size(); ++m) {
    out.aggregates.push_back(make_aggregate(kHomogenizationMetrics[m], eps, h, cols[m]));
    std::vector<double> sq(R);
    for (std::size_t r = 0; r < R; ++r)
      sq[r] = cols[m][r] * cols[m][r];
    out.aggregates.push_back(make_aggregate(kHomogenizationMetrics[m] + "_sq", eps, h, sq));
  }
  out.aggregates.push_back(make_aggregate("h1_sq_gap", eps, h, gap));
  out.aggregates.push_back(make_aggregate("leakage", eps, h, leak));
  out.aggregates.push_back(make_aggregate("mass_drift", eps, h, mdrift));
  out.aggregates.push_back(make_aggregate("energy_drift", eps, h, edrift));
}

std::vector<std::string> homogenization_slope_metrics()
{
  std::vector<std::string> m;
  for (const auto& k : kHomogenizationMetrics) {
    m.push_back(k);
    m.push_back(k + "_sq");
  }
  return m;
}

struct ExactCovariances {
  // Indexed by (p, q) with p <= q in row-major upper-triangular order.
  std::vector<CovariancePair> pairs;
  std::vector<double> char_exponent;
};

ExactCovariances exact_covariances(const ExperimentConfig& cfg, const Trajectory& ref,
                                   const std::vector<GridField>& profiles,
                                   std::optional<double> noise_h)
{
  ExactCovariances ex;
  const auto solver = cfg.solver();
  for (std::size_t p = 0; p < profiles.size(); ++p) {
    ex.char_exponent.push_back(characteristic_exponent(cfg.T, ref, profiles[p], solver, noise_h));
    for (std::size_t q = p; q < profiles.size(); ++q)
      ex.pairs.push_back(exact_covariance(cfg.T, ref, profiles[p], profiles[q], solver, noise_h));
  }
  return ex;
}

/// Centered covariance and pseudo-covariance estimates of <f_p, phi> for all
/// profile pairs, means, characteristic functions and normality statistics.
void emit_fluctuation_law(EnsembleResult& out, double eps, std::optional<double> h,
                          const std::vector<std::vector<cplx>>& z, const ExactCovariances& ex)
{
  const std::size_t R = z.size();
  const std::size_t P = ex.char_exponent.size();
  std::vector<cplx> mean(P);
  for (std::size_t p = 0; p < P; ++p) {
    std::vector<double> re(R), im(R);
    for (std::size_t r = 0; r < R; ++r) {
      re[r] = z[r][p].real();
      im[r] = z[r][p].imag();
    }
    const Estimate mr = mean_se(re), mi = mean_se(im);
    mean[p] = {mr.mean, mi.mean};
    const std::string tag = "[f" + std::to_string(p) + "]";
    out.aggregates.push_back({"mean_re" + tag, eps, h, mr, 0.0});
    out.aggregates.push_back({"mean_im" + tag, eps, h, mi, 0.0});

    std::vector<double> c(R), s(R);
    for (std::size_t r = 0; r < R; ++r) {
      c[r] = std::cos(re[r]);
      s[r] = std::sin(re[r]);
    }
    out.aggregates.push_back(
        make_aggregate("cf_re" + tag, eps, h, c, std::exp(-0.5 * ex.char_exponent[p])));
    out.aggregates.push_back(make_aggregate("cf_im" + tag, eps, h, s, 0.0));

    // Re<f, phi> is centered Gaussian with variance (Re cov + Re pcov) / 2.
    const std::size_t diag = p * P - p * (p - 1) / 2;
    const double var = 0.5 * (ex.pairs[diag].covariance.real() +
                              ex.pairs[diag].pseudo_covariance.real());
    if (R >= 8 && var > 0.0) {
      const double ks = ks_normal(re, 0.0, std::sqrt(var));
      Aggregate a = exact_value("ks_re" + tag, eps, h, ks, R);
      // Null standard deviation of the Kolmogorov statistic.
      a.estimate.se = 0.2603 / std::sqrt(static_cast<double>(R));
      out.aggregates.push_back(a);
      Aggregate ad = exact_value("ad_re" + tag, eps, h, anderson_darling_normal(re), R);
      ad.reference = kAndersonDarlingCritical1pct;
      out.aggregates.push_back(ad);
    }
  }
  std::size_t k = 0;
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t q = p; q < P; ++q, ++k) {
      std::vector<double> cr(R), ci(R), pr(R), pi(R);
      for (std::size_t r = 0; r < R; ++r) {
        const cplx a = z[r][p] - mean[p], b = z[r][q] - mean[q];
        const cplx cv = a * std::conj(b), pc = a * b;
        cr[r] = cv.real();
        ci[r] = cv.imag();
        pr[r] = pc.real();
        pi[r] = pc.imag();
      }
      const std::string tag = pair_tag(p, q);
      const auto& e = ex.pairs[k];
      out.aggregates.push_back(make_aggregate("cov_re" + tag, eps, h, cr, e.covariance.real()));
      out.aggregates.push_back(make_aggregate("cov_im" + tag, eps, h, ci, e.covariance.imag()));
      out.aggregates.push_back(
          make_aggregate("pcov_re" + tag, eps, h, pr, e.pseudo_covariance.real()));
      out.aggregates.push_back(
          make_aggregate("pcov_im" + tag, eps, h, pi, e.pseudo_covariance.imag()));
    }
}

} // namespace

const Aggregate& EnsembleResult::aggregate(std::string_view metric, double epsilon,
                                           std::optional<double> h) const
{
  for (const auto& a : aggregates)
    if (a.metric == metric && a.epsilon == epsilon && a.h == h)
      return a;
  throw std::out_of_range("no aggregate " + std::string(metric) + " at epsilon " + fmt(epsilon));
}

const SlopeFit& EnsembleResult::slope(std::string_view metric, std::optional<double> h) const
{
  for (const auto& s : slopes)
    if (s.metric == metric && s.h == h)
      return s;
  throw std::out_of_range("no slope for " + std::string(metric));
}

SampledMeasure draw_measure(const ExperimentConfig& cfg, std::size_t eps_index,
                            std::size_t replica)
{
  const double eps = cfg.epsilons.at(eps_index);
  if (cfg.lebesgue) {
    SampledMeasure m = lebesgue_measure(cfg.grid);
    m.epsilon = eps;
    return m;
  }
  Rng rng = make_rng(cfg.master_seed, replica, 1 + eps_index);
  return sample(cfg.spec, eps, cfg.grid, rng);
}

EnsembleResult run_sample_measure(const ExperimentConfig& cfg)
{
  cfg.validate();
  EnsembleResult out;
  out.experiment = "sample-measure";
  const std::size_t R = cfg.replicas;
  const double dx = cfg.grid.dx();
  std::vector<RealField> fs;
  for (const auto& p : cfg.profiles)
    fs.push_back(p.sample_real(cfg.grid));

  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
    const double eps = cfg.epsilons[i];
    const std::size_t P = fs.size();
    std::vector<double> atoms(R), mass(R), unit(R);
    std::vector<std::vector<double>> integ(P, std::vector<double>(R));
    parallel_for(R, [&](std::size_t r) {
      const SampledMeasure mu = draw_measure(cfg, i, r);
      atoms[r] = static_cast<double>(mu.atoms.size());
      mass[r] = mu.total_mass();
      unit[r] = mu.mass_in(-0.5, 0.5);
      for (std::size_t p = 0; p < P; ++p)
        integ[p][r] = mu.integrate_cellwise(fs[p]);
    });
    for (std::size_t r = 0; r < R; ++r) {
      Record rec{eps, {}, r, {{"atoms", atoms[r]}, {"total_mass", mass[r]}, {"unit_mass", unit[r]}}};
      for (std::size_t p = 0; p < P; ++p)
        rec.values.emplace_back("int[f" + std::to_string(p) + "]", integ[p][r]);
      out.records.push_back(std::move(rec));
    }
    out.aggregates.push_back(make_aggregate("atoms", eps, {}, atoms));
    out.aggregates.push_back(make_aggregate("total_mass", eps, {}, mass, cfg.grid.length()));
    out.aggregates.push_back(make_aggregate("unit_mass", eps, {}, unit, 1.0));
    for (std::size_t p = 0; p < P; ++p) {
      std::vector<double> lap(R);
      for (std::size_t r = 0; r < R; ++r)
        lap[r] = std::exp(-integ[p][r]);
      std::optional<double> exact;
      if (cfg.lebesgue) {
        exact = std::exp(-pairwise_sum(fs[p].values) * dx);
      } else {
        try {
          exact = laplace_functional_exact(cfg.spec, eps, fs[p]);
        } catch (const DomainError&) {
          // Outside the analyticity region: no oracle, estimate only.
        }
      }
      out.aggregates.push_back(
          make_aggregate("laplace[f" + std::to_string(p) + "]", eps, {}, lap, exact));
    }
  }
  return out;
}

EnsembleResult run_solve(const ExperimentConfig& cfg)
{
  const Trajectory ref = reference_flow(cfg);
  const GridField psi0 = cfg.initial.sample(cfg.grid);
  EnsembleResult out;
  out.experiment = "solve";
  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
    const double eps = cfg.epsilons[i];
    const SampledMeasure mu = draw_measure(cfg, i, 0);
    const Trajectory traj = solve_nls_measure(psi0, mu, cfg.solver());
    const DifferenceTable tab = difference_norms(traj, ref, {cfg.s});
    for (std::size_t k = 0; k < traj.size(); ++k) {
      const auto& row = tab.rows[k];
      out.records.push_back({eps,
                             {},
                             0,
                             {{"t", traj.times[k]},
                              {"mass", traj.mass[k]},
                              {"energy", traj.energy[k]},
                              {"h_minus1", row.h_minus1},
                              {"linf", row.linf},
                              {"h1", row.h1},
                              {"h_minus_s", row.h_minus_s.at(0)}}});
    }
    out.aggregates.push_back(exact_value("mass_drift", eps, {}, max_relative_drift(traj.mass)));
    out.aggregates.push_back(
        exact_value("energy_drift", eps, {}, max_relative_drift(traj.energy)));
    out.aggregates.push_back(exact_value("leakage", eps, {}, leakage(traj)));
    out.aggregates.push_back(exact_value("sup_h_minus1", eps, {}, tab.sup().h_minus1));
  }
  return out;
}

EnsembleResult run_homogenization(const ExperimentConfig& cfg)
{
  const Trajectory ref = reference_flow(cfg);
  const GridField psi0 = cfg.initial.sample(cfg.grid);
  EnsembleResult out;
  out.experiment = "homogenize";
  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
    const double eps = cfg.epsilons[i];
    std::vector<HomogenizationSample> samples(cfg.replicas);
    parallel_for(cfg.replicas, [&](std::size_t r) {
      const SampledMeasure mu = draw_measure(cfg, i, r);
      samples[r] = homogenization_sample(cfg, ref, psi0, mu.cell_density, eps, {},
                                         "replica " + std::to_string(r) + " at epsilon " +
                                             fmt(eps));
    });
    emit_homogenization(out, eps, {}, samples);
  }
  add_slopes(out, cfg.epsilons, homogenization_slope_metrics());
  return out;
}

EnsembleResult run_clt_linear(const ExperimentConfig& cfg, const ProfileSpec& profile)
{
  cfg.validate();
  EnsembleResult out;
  out.experiment = "clt";
  const RealField F = profile.sample_real(cfg.grid);
  const double dx = cfg.grid.dx();
  const double lebesgue_integral = pairwise_sum(F.values) * dx;
  double l3 = 0.0;
  for (double v : F.values)
    l3 += std::pow(std::abs(v), 3);
  l3 *= dx; // ||F||_{L^3}^3
  const std::vector<double> thetas =
      cfg.thetas.empty() ? std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0} : cfg.thetas;
  const std::size_t R = cfg.replicas;

  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
    const double eps = cfg.epsilons[i];
    std::vector<double> y(R);
    parallel_for(R, [&](std::size_t r) {
      const SampledMeasure mu = draw_measure(cfg, i, r);
      y[r] = (mu.integrate_cellwise(F) - lebesgue_integral) / std::sqrt(eps);
    });
    for (std::size_t r = 0; r < R; ++r)
      out.records.push_back({eps, {}, r, {{"y", y[r]}}});

    double dev_exact = 0.0, dev_limit = 0.0, dev_empirical_limit = 0.0;
    for (double theta : thetas) {
      const std::string tag = "[theta=" + fmt(theta) + "]";
      const cplx exact = cfg.lebesgue ? cplx(1.0)
                                      : characteristic_functional_exact(cfg.spec, eps, F, theta);
      const double limit = characteristic_functional_limit(F, theta);
      std::vector<double> c(R), s(R);
      for (std::size_t r = 0; r < R; ++r) {
        c[r] = std::cos(theta * y[r]);
        s[r] = std::sin(theta * y[r]);
      }
      const Estimate ec = mean_se(c), es = mean_se(s);
      out.aggregates.push_back({"cf_re" + tag, eps, {}, ec, exact.real()});
      out.aggregates.push_back({"cf_im" + tag, eps, {}, es, exact.imag()});
      out.aggregates.push_back(exact_value("limit" + tag, eps, {}, limit));
      const cplx emp(ec.mean, es.mean);
      dev_exact = std::max(dev_exact, std::abs(emp - exact));
      dev_limit = std::max(dev_limit, std::abs(exact - limit));
      dev_empirical_limit = std::max(dev_empirical_limit, std::abs(emp - limit));
    }
    Aggregate de = exact_value("max_dev_empirical_exact", eps, {}, dev_exact, R);
    de.estimate.se = 1.0 / std::sqrt(static_cast<double>(R));
    de.reference = 4.0 / std::sqrt(static_cast<double>(R));
    out.aggregates.push_back(de);
    Aggregate dl = exact_value("max_dev_empirical_limit", eps, {}, dev_empirical_limit, R);
    dl.estimate.se = 1.0 / std::sqrt(static_cast<double>(R));
    out.aggregates.push_back(dl);
    out.aggregates.push_back(exact_value("max_dev_exact_limit", eps, {}, dev_limit));
    // Constant C in |exact - limit| <= C sqrt(eps) ||F||_{L^3}^3.
    out.aggregates.push_back(
        exact_value("bound_constant", eps, {}, dev_limit / (std::sqrt(eps) * l3)));
  }
  add_slopes(out, cfg.epsilons, {"max_dev_exact_limit"});
  return out;
}

EnsembleResult run_fluctuations(const ExperimentConfig& cfg,
                                const std::vector<ProfileSpec>& profile_specs)
{
  if (profile_specs.empty())
    throw ValidationError("fluctuations need at least one test profile");
  const Trajectory ref = reference_flow(cfg);
  const GridField psi0 = cfg.initial.sample(cfg.grid);
  const auto solver = cfg.solver();
  std::vector<GridField> profiles;
  for (const auto& p : profile_specs)
    profiles.push_back(p.sample(cfg.grid));
  const ExactCovariances ex = exact_covariances(cfg, ref, profiles, {});
  const std::size_t R = cfg.replicas;

  EnsembleResult out;
  out.experiment = "fluctuations";
  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
    const double eps = cfg.epsilons[i];
    std::vector<std::vector<cplx>> z(R);
    std::vector<double> sup_n(R), sup_limit(R);
    parallel_for(R, [&](std::size_t r) {
      const SampledMeasure mu = draw_measure(cfg, i, r);
      const auto s = homogenization_sample(cfg, ref, psi0, mu.cell_density, eps, profiles,
                                           "replica " + std::to_string(r) + " at epsilon " +
                                               fmt(eps));
      z[r] = s.z;
      sup_n[r] = s.sup.h_minus_s.at(0) / std::sqrt(eps);
      Rng noise_rng = make_rng(cfg.master_seed, r, kNoiseStream + i);
      const auto xi = sample_white_noise(cfg.grid, noise_rng);
      sup_limit[r] = sup_negative_norm(solve_fluctuation(ref, xi, solver), cfg.s);
    });
    for (std::size_t r = 0; r < R; ++r) {
      Record rec{eps, {}, r, {}};
      for (std::size_t p = 0; p < profiles.size(); ++p) {
        rec.values.emplace_back("re[f" + std::to_string(p) + "]", z[r][p].real());
        rec.values.emplace_back("im[f" + std::to_string(p) + "]", z[r][p].imag());
      }
      rec.values.emplace_back("sup_h_minus_s", sup_n[r]);
      rec.values.emplace_back("sup_h_minus_s_limit", sup_limit[r]);
      out.records.push_back(std::move(rec));
    }
    emit_fluctuation_law(out, eps, {}, z, ex);
    out.aggregates.push_back(make_aggregate("sup_h_minus_s", eps, {}, sup_n));
    out.aggregates.push_back(make_aggregate("sup_h_minus_s_limit", eps, {}, sup_limit));
    Aggregate ks = exact_value("ks_sup_h_minus_s", eps, {}, ks_two_sample(sup_n, sup_limit), R);
    ks.estimate.se = 0.2603 * std::sqrt(2.0 / static_cast<double>(R));
    ks.reference = ks_two_sample_critical(R, R, 0.01);
    out.aggregates.push_back(ks);
  }
  return out;
}

EnsembleResult run_mollified(const ExperimentConfig& cfg)
{
  if (cfg.h_list.empty())
    throw ValidationError("mollified runs need a nonempty h_list");
  const Trajectory ref = reference_flow(cfg);
  const GridField psi0 = cfg.initial.sample(cfg.grid);
  std::vector<GridField> profiles;
  for (const auto& p : cfg.profiles)
    profiles.push_back(p.sample(cfg.grid));
  std::vector<ExactCovariances> exact;
  for (double h : cfg.h_list)
    exact.push_back(exact_covariances(cfg, ref, profiles, h));
  const std::size_t R = cfg.replicas, H = cfg.h_list.size();

  EnsembleResult out;
  out.experiment = "mollified";
  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
    const double eps = cfg.epsilons[i];
    // samples[k][r]: the same draw of mu_n mollified at each h.
    std::vector<std::vector<HomogenizationSample>> samples(H,
                                                           std::vector<HomogenizationSample>(R));
    parallel_for(R, [&](std::size_t r) {
      const SampledMeasure mu = draw_measure(cfg, i, r);
      for (std::size_t k = 0; k < H; ++k) {
        const MollifiedMeasure m = mollify(mu, cfg.h_list[k]);
        samples[k][r] = homogenization_sample(
            cfg, ref, psi0, m.density, eps, profiles,
            "replica " + std::to_string(r) + " at epsilon " + fmt(eps) + ", h " +
                fmt(cfg.h_list[k]));
      }
    });
    for (std::size_t k = 0; k < H; ++k) {
      const double h = cfg.h_list[k];
      emit_homogenization(out, eps, h, samples[k]);
      if (!profiles.empty()) {
        std::vector<std::vector<cplx>> z(R);
        for (std::size_t r = 0; r < R; ++r)
          z[r] = samples[k][r].z;
        emit_fluctuation_law(out, eps, h, z, exact[k]);
        // The limit noise is mollified too, so compare each h against its own limit.
        for (std::size_t p = 0; p < profiles.size(); ++p) {
          const Aggregate c = out.aggregate("cov_re" + pair_tag(p, p), eps, h);
          if (!c.reference || !(*c.reference > 0.0))
            continue;
          Estimate e = c.estimate;
          e.mean /= *c.reference;
          e.se /= *c.reference;
          out.aggregates.push_back({"cov_ratio" + pair_tag(p, p), eps, h, e, 1.0});
        }
      }
    }

    // Uniformity summaries over h: max of each mean and relative spread.
    std::vector<std::string> metrics = kHomogenizationMetrics;
    for (std::size_t p = 0; p < profiles.size(); ++p)
      metrics.push_back("cov_ratio" + pair_tag(p, p));
    for (const auto& m : metrics) {
      const Aggregate* hi = nullptr;
      const Aggregate* lo = nullptr;
      for (double h : cfg.h_list) {
        const Aggregate& a = out.aggregate(m, eps, h);
        if (!hi || a.estimate.mean > hi->estimate.mean)
          hi = &a;
        if (!lo || a.estimate.mean < lo->estimate.mean)
          lo = &a;
      }
      const Aggregate top = *hi, bottom = *lo;
      out.aggregates.push_back({"max_over_h:" + m, eps, {}, top.estimate, {}});
      Aggregate spread = exact_value("spread_over_h:" + m, eps, {}, 0.0, top.estimate.count);
      if (top.estimate.mean > 0.0) {
        spread.estimate.mean = (top.estimate.mean - bottom.estimate.mean) / top.estimate.mean;
        spread.estimate.se =
            std::hypot(top.estimate.se, bottom.estimate.se) / top.estimate.mean;
      }
      out.aggregates.push_back(spread);
    }
  }
  for (double h : cfg.h_list)
    add_slopes(out, cfg.epsilons, homogenization_slope_metrics(), h);
  return out;
}

EnsembleResult run_haar_stats(const ExperimentConfig& cfg)
{
  cfg.validate();
  if (cfg.lebesgue)
    throw ValidationError("Haar statistics need a random measure, not lebesgue");
  const auto& hs = cfg.haar;
  if (hs.indices.empty() && hs.moment_replicas == 0)
    throw ValidationError("haar-stats needs haar.indices or haar.moment_replicas");
  EnsembleResult out;
  out.experiment = "haar-stats";
  const std::size_t R = cfg.replicas, W = hs.indices.size();

  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
    const double eps = cfg.epsilons[i];
    if (W > 0) {
      const auto x = sample_haar_coefficients(cfg.spec, eps, hs.indices, cfg.grid, R,
                                              sub_seed(cfg.master_seed, 0, kHaarStream + i));
      for (std::size_t r = 0; r < R; ++r) {
        Record rec{eps, {}, r, {}};
        for (std::size_t a = 0; a < W; ++a)
          rec.values.emplace_back("x" + std::to_string(a), x[r * W + a]);
        out.records.push_back(std::move(rec));
      }
      for (std::size_t a = 0; a < W; ++a) {
        std::vector<double> col(R);
        for (std::size_t r = 0; r < R; ++r)
          col[r] = x[r * W + a];
        out.aggregates.push_back(make_aggregate("mean[" + std::to_string(a) + "]", eps, {}, col, 0.0));
      }
      // Gram matrix of X / sqrt(eps).
      for (std::size_t a = 0; a < W; ++a)
        for (std::size_t b = a; b < W; ++b) {
          std::vector<double> prod(R);
          for (std::size_t r = 0; r < R; ++r)
            prod[r] = x[r * W + a] * x[r * W + b] / eps;
          out.aggregates.push_back(make_aggregate("gram[" + std::to_string(a) + "," +
                                                      std::to_string(b) + "]",
                                                  eps, {}, prod, a == b ? 1.0 : 0.0));
        }
      for (const auto& pos : hs.cumulants) {
        const std::size_t J = pos.size();
        std::vector<double> cols(R * J);
        std::vector<HaarIndex> chosen;
        for (int p : pos)
          chosen.push_back(hs.indices[static_cast<std::size_t>(p)]);
        for (std::size_t r = 0; r < R; ++r)
          for (std::size_t j = 0; j < J; ++j)
            cols[r * J + j] = x[r * W + static_cast<std::size_t>(pos[j])];
        out.aggregates.push_back({"kappa" + index_list(pos), eps, {},
                                  joint_cumulant_estimate(cols, static_cast<int>(J)),
                                  exact_joint_cumulant(cfg.spec, eps, chosen)});
      }
    }
    if (hs.moment_replicas > 0) {
      Estimate m = weighted_negative_norm_moment(cfg.spec, eps, cfg.initial.sample(cfg.grid),
                                                 hs.moment_s, 1, hs.moment_replicas,
                                                 sub_seed(cfg.master_seed, 0, kMomentStream + i));
      m.mean /= eps;
      m.se /= eps;
      out.aggregates.push_back({"neg_norm_moment_over_eps", eps, {}, m, {}});
    }
  }
  return out;
}

} // namespace sprinkle
