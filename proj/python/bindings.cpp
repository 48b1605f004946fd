#include "sprinkle/errors.hpp"
#include "sprinkle/experiments.hpp"
#include "sprinkle/levy.hpp"
#include "sprinkle/linearized.hpp"
#include "sprinkle/nls.hpp"

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <sstream>

namespace py = pybind11;
using namespace sprinkle;

namespace {

template <class T> py::array_t<T> to_array(const std::vector<T>& v)
{
  py::array_t<T> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

template <class T> std::vector<T> from_array(const Grid& grid, py::array_t<T, py::array::forcecast> a)
{
  if (a.ndim() != 1 || a.shape(0) != grid.size())
    throw SizeError("expected a 1-d array of length " + std::to_string(grid.size()));
  return std::vector<T>(a.data(), a.data() + a.shape(0));
}

RealField real_field(const Grid& grid, py::array_t<double, py::array::forcecast> a)
{
  return RealField(grid, from_array<double>(grid, a));
}

GridField complex_field(const Grid& grid, py::array_t<cplx, py::array::forcecast> a)
{
  return GridField(grid, from_array<cplx>(grid, a));
}

py::dict trajectory_dict(const Trajectory& t)
{
  py::array_t<cplx> states({static_cast<py::ssize_t>(t.size()), static_cast<py::ssize_t>(t.grid.size())});
  auto s = states.mutable_unchecked<2>();
  for (std::size_t i = 0; i < t.size(); ++i)
    for (int j = 0; j < t.grid.size(); ++j)
      s(i, j) = t.states[i][j];
  py::dict d;
  d["times"] = to_array(t.times);
  d["states"] = states;
  d["mass"] = to_array(t.mass);
  d["energy"] = to_array(t.energy);
  return d;
}

py::dict measure_dict(const SampledMeasure& mu)
{
  std::vector<double> pos, w;
  for (const auto& a : mu.atoms) {
    pos.push_back(a.position);
    w.push_back(a.weight);
  }
  py::dict d;
  d["epsilon"] = mu.epsilon;
  d["lebesgue"] = mu.lebesgue;
  d["positions"] = to_array(pos);
  d["weights"] = to_array(w);
  d["cell_density"] = to_array(mu.cell_density);
  d["total_mass"] = mu.total_mass();
  return d;
}

SolverConfig solver_config(const Grid& grid, double dt, double T, int store_every, bool dealias)
{
  SolverConfig c;
  c.grid = grid;
  c.dt = dt;
  c.T = T;
  c.store_every = store_every;
  c.dealias = dealias;
  return c;
}

using Runner = EnsembleResult (*)(const ExperimentConfig&);

std::string run_to_jsonl(Runner run, const std::string& text)
{
  const ExperimentConfig cfg = parse_config(text);
  EnsembleResult r;
  {
    py::gil_scoped_release release;
    r = run(cfg);
  }
  std::ostringstream os;
  write_jsonl(os, r);
  return os.str();
}

} // namespace

PYBIND11_MODULE(_core, m)
{
  m.doc() = "NLS with random point-measure nonlinearity: measures, solvers, fluctuation laws";

  auto base = py::register_exception<Error>(m, "SprinkleError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());

  py::class_<Grid>(m, "Grid")
      .def(py::init<double, int>(), py::arg("length"), py::arg("cells"))
      .def_property_readonly("length", &Grid::length)
      .def_property_readonly("cells", &Grid::size)
      .def_property_readonly("dx", &Grid::dx)
      .def("nodes", [](const Grid& g) { return to_array(g.nodes()); })
      .def("__repr__", [](const Grid& g) {
        return "Grid(length=" + std::to_string(g.length()) + ", cells=" + std::to_string(g.size()) + ")";
      });

  py::class_<LevySpec>(m, "LevySpec")
      .def_static("poisson", &LevySpec::poisson, py::arg("a") = 1.0)
      .def_static("gamma", &LevySpec::gamma, py::arg("a") = 0.5)
      .def_static(
          "compound_poisson",
          [](const std::vector<std::pair<double, double>>& jumps, double a) {
            std::vector<Jump> js;
            for (auto [s, p] : jumps)
              js.push_back({s, p});
            return LevySpec::compound_poisson(js, a);
          },
          py::arg("jumps"), py::arg("a") = 1.0)
      .def_property_readonly("kind", [](const LevySpec& s) { return to_string(s.kind); })
      .def_readonly("rate", &LevySpec::rate)
      .def_readonly("a", &LevySpec::a)
      .def("validate", &LevySpec::validate)
      .def("moment", &LevySpec::moment, py::arg("order"))
      .def("lebesgue_density", &LevySpec::lebesgue_density);

  m.def("phi", &phi_eval, py::arg("spec"), py::arg("z"));
  m.def("phi_derivative", &phi_derivative, py::arg("spec"), py::arg("order"));

  m.def(
      "sample_measure",
      [](const LevySpec& spec, double epsilon, const Grid& grid, std::uint64_t seed,
         std::uint64_t replica, std::uint64_t stream) {
        Rng rng = make_rng(seed, replica, stream);
        return measure_dict(sample(spec, epsilon, grid, rng));
      },
      py::arg("spec"), py::arg("epsilon"), py::arg("grid"), py::arg("seed"), py::arg("replica") = 0,
      py::arg("stream") = 1);

  m.def(
      "mollified_density",
      [](const LevySpec& spec, double epsilon, const Grid& grid, double h, std::uint64_t seed) {
        Rng rng = make_rng(seed, 0, 1);
        return to_array(mollify(sample(spec, epsilon, grid, rng), h).density);
      },
      py::arg("spec"), py::arg("epsilon"), py::arg("grid"), py::arg("h"), py::arg("seed"));

  m.def(
      "laplace_functional",
      [](const LevySpec& spec, double epsilon, const Grid& grid, py::array_t<double> f) {
        return laplace_functional_exact(spec, epsilon, real_field(grid, f));
      },
      py::arg("spec"), py::arg("epsilon"), py::arg("grid"), py::arg("f"));

  m.def(
      "characteristic_functional",
      [](const LevySpec& spec, double epsilon, const Grid& grid, py::array_t<double> F, double theta) {
        return characteristic_functional_exact(spec, epsilon, real_field(grid, F), theta);
      },
      py::arg("spec"), py::arg("epsilon"), py::arg("grid"), py::arg("F"), py::arg("theta") = 1.0);

  m.def(
      "characteristic_functional_limit",
      [](const Grid& grid, py::array_t<double> F, double theta) {
        return characteristic_functional_limit(real_field(grid, F), theta);
      },
      py::arg("grid"), py::arg("F"), py::arg("theta") = 1.0);

  m.def(
      "sobolev_norm",
      [](const Grid& grid, py::array_t<cplx> f, double s) {
        return sobolev_norm(complex_field(grid, f), s);
      },
      py::arg("grid"), py::arg("f"), py::arg("s"));

  m.def(
      "solve_nls",
      [](const Grid& grid, py::array_t<cplx> psi0, double dt, double T, int store_every,
         bool dealias, std::optional<py::array_t<double>> density) {
        const SolverConfig cfg = solver_config(grid, dt, T, store_every, dealias);
        const GridField u0 = complex_field(grid, psi0);
        if (!density)
          return trajectory_dict(solve_nls(u0, cfg));
        const std::vector<double> w = from_array<double>(grid, *density);
        return trajectory_dict(solve_nls_measure(u0, w, cfg));
      },
      py::arg("grid"), py::arg("psi0"), py::arg("dt"), py::arg("T"), py::arg("store_every") = 1,
      py::arg("dealias") = false, py::arg("density") = py::none(),
      "Strang split-step solve; with `density` the cubic term is weighted by it.");

  m.def(
      "exact_covariance",
      [](const Grid& grid, py::array_t<cplx> psi0, double dt, double T, py::array_t<cplx> f,
         py::array_t<cplx> g, std::optional<double> noise_h) {
        const SolverConfig cfg = solver_config(grid, dt, T, 1, false);
        const Trajectory psi = solve_nls(complex_field(grid, psi0), cfg);
        const CovariancePair c =
            exact_covariance(T, psi, complex_field(grid, f), complex_field(grid, g), cfg, noise_h);
        return py::make_tuple(c.covariance, c.pseudo_covariance);
      },
      py::arg("grid"), py::arg("psi0"), py::arg("dt"), py::arg("T"), py::arg("f"), py::arg("g"),
      py::arg("noise_h") = py::none(),
      "(covariance, pseudo_covariance) of the limiting fluctuation pairings at time T.");

  m.def(
      "validate_config", [](const std::string& text) { parse_config(text); }, py::arg("text"));
  m.def("config_hash", [](const std::string& text) { return fnv1a64(text); }, py::arg("text"));

  const std::pair<const char*, Runner> runners[] = {
      {"sample_measure_experiment", &run_sample_measure},
      {"homogenize", &run_homogenization},
      {"mollified", &run_mollified},
      {"haar_stats", &run_haar_stats},
  };
  for (auto [name, fn] : runners)
    m.def(
        name, [fn](const std::string& text) { return run_to_jsonl(fn, text); }, py::arg("config_text"),
        "Runs the experiment on a YAML config string and returns its JSON-lines output.");
  m.def(
      "fluctuations",
      [](const std::string& text) {
        return run_to_jsonl([](const ExperimentConfig& c) { return run_fluctuations(c, c.profiles); },
                            text);
      },
      py::arg("config_text"));
  m.def(
      "clt",
      [](const std::string& text, std::size_t profile) {
        const ExperimentConfig cfg = parse_config(text);
        if (!cfg.profiles.empty() && profile >= cfg.profiles.size())
          throw ValidationError("profile index out of range");
        const ProfileSpec F = cfg.profiles.empty() ? cfg.initial : cfg.profiles[profile];
        EnsembleResult r;
        {
          py::gil_scoped_release release;
          r = run_clt_linear(cfg, F);
        }
        std::ostringstream os;
        write_jsonl(os, r);
        return os.str();
      },
      py::arg("config_text"), py::arg("profile") = 0);

  m.attr("__version__") = code_version();
}
