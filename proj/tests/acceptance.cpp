// Acceptance suite: one PASS/FAIL line per criterion. Optional arguments
// select criteria by number, e.g. `acceptance 3 7`.

#include "sprinkle/cli.hpp"
#include "sprinkle/errors.hpp"
#include "sprinkle/experiments.hpp"
#include "sprinkle/linearized.hpp"
#include "sprinkle/nls.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace sprinkle;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what)
  {
    if (!detail.empty())
      detail += "; ";
    detail += what;
    if (!ok) {
      pass = false;
      detail += " [FAILED]";
    }
  }
};

std::string sci(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

ExperimentConfig config(const std::string& name)
{
  return load_config((fs::path(SPRINKLE_SOURCE_DIR) / "configs" / name).string());
}

double max_rel_drift(const std::vector<double>& v)
{
  double d = 0.0;
  for (double x : v)
    d = std::max(d, std::abs(x / v.front() - 1.0));
  return d;
}

GridField gaussian(const Grid& g, double width2 = 4.0)
{
  GridField f(g);
  for (int j = 0; j < g.size(); ++j)
    f[j] = std::exp(-g.x(j) * g.x(j) / width2);
  return f;
}

SolverConfig solver(const Grid& g, double dt, double T, double t0 = 0.0)
{
  SolverConfig c;
  c.grid = g;
  c.dt = dt;
  c.T = T;
  c.t0 = t0;
  return c;
}

/// |mean - reference| / se, or 0 for an exact match with zero se.
double zscore(const Aggregate& a)
{
  const double diff = std::abs(a.estimate.mean - a.reference.value());
  if (a.estimate.se == 0.0)
    return diff < 1e-12 ? 0.0 : INFINITY;
  return diff / a.estimate.se;
}

bool starts_with(const std::string& s, const std::string& prefix)
{
  return s.rfind(prefix, 0) == 0;
}

Outcome conservation()
{
  const Grid g(64.0, 256);
  Rng rng = make_rng(20240608, 0);
  const auto mu = sample(LevySpec::poisson(), 0.1, g, rng);
  const auto traj = solve_nls_measure(gaussian(g), mu, solver(g, 1e-3, 1.0));
  Outcome o;
  const double m = max_rel_drift(traj.mass), e = max_rel_drift(traj.energy);
  o.require(m < 1e-12, "mass drift " + sci(m) + " < 1e-12");
  o.require(e < 1e-5, "energy drift " + sci(e) + " < 1e-5");
  return o;
}

Outcome plane_wave()
{
  const Grid g(2 * std::numbers::pi, 64);
  const double A = 0.8, k = 2.0;
  GridField f(g);
  for (int j = 0; j < g.size(); ++j)
    f[j] = std::polar(A, k * g.x(j));
  const auto traj = solve_nls(f, solver(g, 1e-3, 1.0));
  const double omega = k * k + 2 * A * A;
  double worst = 0.0;
  for (int j = 0; j < g.size(); ++j) {
    const cplx expect = std::polar(A, k * g.x(j) - omega);
    worst = std::max(worst, std::abs(std::arg(traj.final_state()[j] / expect)) / omega);
  }
  Outcome o;
  o.require(worst < 1e-4, "relative phase error " + sci(worst) + " < 1e-4");
  return o;
}

Outcome laplace()
{
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  int checks = 0;
  for (const char* name :
       {"laplace_poisson.yaml", "laplace_compound_poisson.yaml", "laplace_gamma.yaml"}) {
    const auto cfg = config(name);
    const auto r = run_sample_measure(cfg);
    for (const auto& a : r.aggregates)
      if (starts_with(a.metric, "laplace[")) {
        worst = std::max(worst, zscore(a));
        ++checks;
      }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.require(checks == 18, std::to_string(checks) + " functionals (3 specs x 2 eps x 3 f)");
  o.require(worst < 4.0, "max |emp - exact| / SE " + sci(worst) + " < 4");
  o.require(secs < 120.0, "runtime " + sci(secs) + " s < 120 s");
  return o;
}

Outcome haar_cumulants()
{
  Outcome o;
  for (const char* name : {"haar_poisson.yaml", "haar_gamma.yaml"}) {
    const auto r = run_haar_stats(config(name));
    double worst_k = 0.0, worst_g = 0.0;
    int orders = 0, gram = 0;
    for (const auto& a : r.aggregates) {
      if (starts_with(a.metric, "kappa[")) {
        worst_k = std::max(worst_k, zscore(a));
        ++orders;
      } else if (starts_with(a.metric, "gram[")) {
        worst_g = std::max(worst_g, zscore(a));
        ++gram;
      }
    }
    const std::string tag = name == std::string("haar_gamma.yaml") ? "gamma" : "poisson";
    o.require(orders >= 2 && worst_k < 4.0,
              tag + " cumulants (orders 2,3) max z " + sci(worst_k) + " < 4");
    o.require(gram == 36 && worst_g < 4.0, tag + " Gram 8x8 max z " + sci(worst_g) + " < 4");
  }
  return o;
}

Outcome moment_scaling()
{
  const auto cfg = config("moments.yaml");
  const auto r = run_haar_stats(cfg);
  double lo = INFINITY, hi = 0.0;
  for (double e : cfg.epsilons) {
    const double v = r.aggregate("neg_norm_moment_over_eps", e).estimate.mean;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Outcome o;
  o.require(hi / lo < 3.0, "max/min of E||.||^2/eps = " + sci(hi / lo) + " < 3 over eps " +
                               "{0.2, 0.1, 0.05}");
  return o;
}

Outcome homogenization()
{
  const auto cfg = config("homogenize.yaml");
  const auto r = run_homogenization(cfg);
  Outcome o;
  bool decreasing = true;
  std::string means;
  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
    const double m = r.aggregate("h_minus1", cfg.epsilons[i]).estimate.mean;
    means += (i ? ", " : "") + sci(m);
    if (i > 0)
      decreasing = decreasing && m < r.aggregate("h_minus1", cfg.epsilons[i - 1]).estimate.mean;
  }
  o.require(decreasing, "H^-1 means strictly decreasing (" + means + ")");
  const auto& first = r.aggregate("h_minus1", cfg.epsilons.front()).estimate;
  const auto& last = r.aggregate("h_minus1", cfg.epsilons.back()).estimate;
  const double sep = (first.mean - last.mean) / std::hypot(first.se, last.se);
  o.require(sep > 4.0, "endpoint separation " + sci(sep) + " SE > 4");
  const double slope = r.slope("h_minus1").fit.slope;
  o.require(slope >= 0.125, "log-log slope " + sci(slope) + " >= 1/8");
  return o;
}

Outcome propagator()
{
  Outcome o;
  const Grid g(32.0, 256);
  const double dt = 1e-3;
  const SolverConfig c = solver(g, dt, 1.0, -1.0);
  const auto psi = solve_nls(gaussian(g), c);
  Rng rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  GridField u0(g);
  for (auto& v : u0.values)
    v = {n(rng), n(rng)};
  auto rel = [](const GridField& a, const GridField& b) { return l2_norm(a - b) / l2_norm(b); };

  double flow = 0.0;
  for (const auto& [sigma, tau, t] : std::vector<std::array<double, 3>>{
           {-1.0, 0.0, 1.0}, {-0.5, 0.3, 0.9}, {0.8, -0.2, -0.9}, {0.25, 0.75, -0.5}}) {
    const GridField direct = propagate_linearized(u0, sigma, t, psi, c);
    const GridField composed =
        propagate_linearized(propagate_linearized(u0, sigma, tau, psi, c), tau, t, psi, c);
    flow = std::max(flow, rel(composed, direct));
  }
  o.require(flow < 1e-6, "flow property " + sci(flow) + " < 1e-6");
  const double id = rel(propagate_linearized(u0, 0.37, 0.37, psi, c), u0);
  o.require(id < 1e-10, "S(t,t) = I to " + sci(id) + " < 1e-10");

  // psi = 0: compare with the exact Fourier multiplier exp(-i k^2 (t - tau)).
  const SolverConfig cz = solver(g, dt, 1.0, 0.0);
  const auto zero = solve_nls(GridField(g), cz);
  const double tau = 0.2, t = 0.9;
  const GridField u = propagate_linearized(u0, tau, t, zero, cz);
  std::vector<cplx> spec = u0.values;
  fft_forward(spec);
  for (int m = 0; m < g.size(); ++m) {
    const double k = g.wavenumber(m);
    spec[static_cast<std::size_t>(m)] *= std::polar(1.0, -k * k * (t - tau));
  }
  fft_inverse(spec);
  const double free = rel(u, GridField(g, spec));
  o.require(free < 1e-10, "psi = 0 gives the free propagator to " + sci(free) + " < 1e-10");
  return o;
}

Outcome fluctuation_law()
{
  const auto cfg = config("fluctuations.yaml");
  const auto r = run_fluctuations(cfg, cfg.profiles);
  Outcome o;
  double worst = 0.0;
  int entries = 0;
  double worst_ad = 0.0;
  for (const auto& a : r.aggregates) {
    if (starts_with(a.metric, "cov_") || starts_with(a.metric, "pcov_")) {
      worst = std::max(worst, zscore(a));
      ++entries;
    } else if (starts_with(a.metric, "ad_re[")) {
      worst_ad = std::max(worst_ad, a.estimate.mean);
    }
  }
  o.require(entries == 24, std::to_string(entries) + " covariance entries over 3 profiles");
  o.require(worst < 4.0, "max z vs exact covariance " + sci(worst) + " < 4");
  o.require(worst_ad < kAndersonDarlingCritical1pct,
            "max Anderson-Darling A^2 " + sci(worst_ad) + " < " +
                sci(kAndersonDarlingCritical1pct) + " (1% level)");
  return o;
}

Outcome scalar_clt()
{
  const auto cfg = config("clt.yaml");
  const auto r = run_clt_linear(cfg, cfg.initial);
  Outcome o;
  const double noise = 4.0 / std::sqrt(static_cast<double>(cfg.replicas));
  double worst = 0.0;
  bool decreasing = true, empirical_bounded = true;
  double cmin = INFINITY, cmax = 0.0;
  const RealField F = cfg.initial.sample_real(cfg.grid);
  double l3 = 0.0;
  for (double v : F.values)
    l3 += std::pow(std::abs(v), 3) * cfg.grid.dx();
  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
    const double e = cfg.epsilons[i];
    worst = std::max(worst, r.aggregate("max_dev_empirical_exact", e).estimate.mean);
    const double d = r.aggregate("max_dev_exact_limit", e).estimate.mean;
    if (i > 0)
      decreasing = decreasing && d < r.aggregate("max_dev_exact_limit", cfg.epsilons[i - 1])
                                         .estimate.mean;
    const double C = r.aggregate("bound_constant", e).estimate.mean;
    cmin = std::min(cmin, C);
    cmax = std::max(cmax, C);
  }
  for (double e : cfg.epsilons)
    empirical_bounded =
        empirical_bounded && r.aggregate("max_dev_empirical_limit", e).estimate.mean <=
                                 cmax * std::sqrt(e) * l3 + noise;
  o.require(worst < noise, "max |empirical - exact| " + sci(worst) + " < 4/sqrt(R) = " +
                               sci(noise));
  o.require(decreasing, "distance to Gaussian limit strictly decreasing in eps");
  o.require(cmax / cmin < 2.0, "C in C sqrt(eps)||F||_3^3 stable: " + sci(cmin) + ".." +
                                   sci(cmax));
  o.require(empirical_bounded, "empirical distance to limit <= C sqrt(eps)||F||_3^3 + 4/sqrt(R)");
  return o;
}

Outcome mollified()
{
  const auto cfg = config("mollified.yaml");
  const auto r = run_mollified(cfg);
  Outcome o;
  const double eps = cfg.epsilons.front();
  const auto spread = [&](const std::string& m) {
    return r.aggregate("spread_over_h:" + m, eps).estimate.mean;
  };
  for (const char* m : {"h_minus1", "h_minus_s", "linf", "cov_ratio[f0,f0]", "cov_ratio[f1,f1]"})
    o.require(spread(m) < 0.2, std::string(m) + " spread over h " + sci(spread(m)) + " < 0.2");
  o.detail += "; h1 spread over h " + sci(spread("h1")) + " (reported only)";
  return o;
}

Outcome determinism()
{
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "sprinkle_acceptance_determinism";
  fs::remove_all(root);
  const std::string cfg = (fs::path(SPRINKLE_SOURCE_DIR) / "configs" / "smoke.yaml").string();
  std::ostringstream sink;
  std::string bytes[2];
  for (int k = 0; k < 2; ++k) {
    const std::string out = (root / ("run" + std::to_string(k))).string();
    const char* argv[] = {"sprinkle", "homogenize", cfg.c_str(), "-o", out.c_str()};
    const int code = cli_main(5, argv, sink, sink);
    o.require(code == 0, "run " + std::to_string(k + 1) + " exit " + std::to_string(code));
    std::ifstream in(fs::path(out) / "results.jsonl", std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    bytes[k] = ss.str();
  }
  o.require(!bytes[0].empty() && bytes[0] == bytes[1],
            "results.jsonl byte-identical (" + std::to_string(bytes[0].size()) + " bytes)");
  fs::remove_all(root);
  return o;
}

} // namespace

int main(int argc, char** argv)
{
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"conservation", conservation},
      {"plane-wave dispersion", plane_wave},
      {"Laplace functional exactness", laplace},
      {"Haar cumulants and orthonormality", haar_cumulants},
      {"negative-norm moment scaling", moment_scaling},
      {"homogenization rate", homogenization},
      {"linearized propagator", propagator},
      {"fluctuation law", fluctuation_law},
      {"scalar CLT", scalar_clt},
      {"mollified uniformity", mollified},
      {"determinism", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i)
    selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id))
      continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  %2d  %-34s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
