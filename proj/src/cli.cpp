#include "sprinkle/cli.hpp"
#include "sprinkle/errors.hpp"
#include "sprinkle/experiments.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

namespace sprinkle {

namespace {

struct Invocation {
  std::string config_path;
  std::string output;
  std::size_t profile = 0;
};

std::string read_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError("cannot open config file", 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hex64(std::uint64_t v)
{
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text(const std::filesystem::path& path, const std::function<void(std::ostream&)>& fn)
{
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw Error("cannot write " + path.string());
  fn(os);
}

using Runner = std::function<EnsembleResult(const ExperimentConfig&, const Invocation&)>;

int execute(const std::string& name, const Invocation& inv, const Runner& run, std::ostream& out,
            std::ostream& err)
{
  std::string text;
  ExperimentConfig cfg;
  try {
    text = read_file(inv.config_path);
    cfg = parse_config(text);
  } catch (const ConfigError& e) {
    err << inv.config_path << ':' << e.line << ": error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << inv.config_path << ":0: error: " << e.what() << '\n';
    return 2;
  }
  if (!inv.output.empty())
    cfg.output_dir = inv.output;

  if (name == "validate-config") {
    out << inv.config_path << ": ok (" << (cfg.lebesgue ? "lebesgue" : to_string(cfg.spec.kind))
        << ", " << cfg.epsilons.size() << " epsilon values, " << cfg.replicas << " replicas)\n";
    return 0;
  }
  try {
    const EnsembleResult result = run(cfg, inv);
    Manifest m{name, hex64(fnv1a64(text)), cfg.master_seed, code_version()};
    write_result_directory(cfg.output_dir, result, m, text);
    out << name << ": wrote " << result.records.size() << " records and "
        << result.aggregates.size() << " aggregates to " << cfg.output_dir << '\n';
    return 0;
  } catch (const ConfigError& e) {
    err << inv.config_path << ':' << e.line << ": error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << name << ": error: " << e.what() << '\n';
    return 1;
  }
}

EnsembleResult sample_measure_with_csv(const ExperimentConfig& cfg)
{
  EnsembleResult r = run_sample_measure(cfg);
  std::filesystem::create_directories(cfg.output_dir);
  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
    const SampledMeasure mu = draw_measure(cfg, i, 0);
    write_text(std::filesystem::path(cfg.output_dir) / ("measure_eps" + std::to_string(i) + ".csv"),
               [&](std::ostream& os) { write_csv(os, mu); });
  }
  return r;
}

ProfileSpec clt_profile(const ExperimentConfig& cfg, std::size_t index)
{
  if (cfg.profiles.empty())
    return cfg.initial;
  if (index >= cfg.profiles.size())
    throw ValidationError("--profile " + std::to_string(index) + " is out of range; the config has " +
                          std::to_string(cfg.profiles.size()) + " profiles");
  return cfg.profiles[index];
}

} // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Monte Carlo lab for NLS with random point-measure nonlinearity"};
  app.require_subcommand(1);
  app.set_version_flag("--version", code_version());

  Invocation inv;
  struct Entry {
    const char* name;
    const char* help;
    Runner run;
  };
  const std::vector<Entry> entries = {
      {"sample-measure", "Sample mu_n; masses and Laplace functionals; measure CSVs",
       [](const ExperimentConfig& c, const Invocation&) { return sample_measure_with_csv(c); }},
      {"solve", "Single realization per epsilon with per-time diagnostics",
       [](const ExperimentConfig& c, const Invocation&) { return run_solve(c); }},
      {"homogenize", "Ensemble differences psi_n - psi and convergence slopes",
       [](const ExperimentConfig& c, const Invocation&) { return run_homogenization(c); }},
      {"clt", "Characteristic function of the linear statistic against exact and Gaussian",
       [](const ExperimentConfig& c, const Invocation& i) {
         return run_clt_linear(c, clt_profile(c, i.profile));
       }},
      {"fluctuations", "Law of <f, phi_n(T)> against the Gaussian limit",
       [](const ExperimentConfig& c, const Invocation&) {
         return run_fluctuations(c, c.profiles);
       }},
      {"mollified", "Homogenization and fluctuations for mollified measures",
       [](const ExperimentConfig& c, const Invocation&) { return run_mollified(c); }},
      {"haar-stats", "Haar Gram matrix, cumulants and negative-norm moments",
       [](const ExperimentConfig& c, const Invocation&) { return run_haar_stats(c); }},
      {"validate-config", "Parse and check a config file", nullptr},
  };

  std::vector<CLI::App*> subs;
  for (const auto& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    sub->add_option("config", inv.config_path, "YAML experiment config")->required();
    if (e.run)
      sub->add_option("-o,--output", inv.output, "Override output_dir");
    if (std::string(e.name) == "clt")
      sub->add_option("--profile", inv.profile, "Index into profiles (default 0)");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  for (std::size_t k = 0; k < entries.size(); ++k)
    if (subs[k]->parsed())
      return execute(entries[k].name, inv, entries[k].run, out, err);
  return 1;
}

} // namespace sprinkle
