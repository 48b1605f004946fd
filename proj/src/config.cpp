#include "sprinkle/errors.hpp"
#include "sprinkle/experiments.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace sprinkle {

std::string to_string(ProfileShape shape)
{
  switch (shape) {
  case ProfileShape::Gaussian:
    return "gaussian";
  case ProfileShape::GaussianCos:
    return "gaussian_cos";
  case ProfileShape::Sech:
    return "sech";
  }
  return "unknown";
}

cplx ProfileSpec::value(double x) const
{
  const double u = (x - center) / width;
  const cplx rot = std::polar(1.0, phase);
  switch (shape) {
  case ProfileShape::Gaussian:
    return amplitude * std::exp(-0.5 * u * u) * std::polar(1.0, wavenumber * x) * rot;
  case ProfileShape::GaussianCos:
    return amplitude * std::exp(-0.5 * u * u) * std::cos(wavenumber * x) * rot;
  case ProfileShape::Sech:
    return amplitude / std::cosh(u) * std::polar(1.0, wavenumber * x) * rot;
  }
  return 0.0;
}

GridField ProfileSpec::sample(const Grid& grid) const
{
  GridField f(grid);
  for (int j = 0; j < grid.size(); ++j)
    f[j] = value(grid.x(j));
  return f;
}

RealField ProfileSpec::sample_real(const Grid& grid) const
{
  RealField f(grid);
  for (int j = 0; j < grid.size(); ++j)
    f[j] = value(grid.x(j)).real();
  return f;
}

SolverConfig ExperimentConfig::solver() const
{
  SolverConfig c;
  c.grid = grid;
  c.dt = dt;
  c.T = T;
  c.store_every = store_every;
  c.dealias = dealias;
  return c;
}

namespace {

using LineOf = std::function<int(const std::string&)>;

[[noreturn]] void fail(const LineOf& line_of, const std::string& key, const std::string& msg)
{
  throw ConfigError(key + ": " + msg, line_of(key));
}

void validate_profile(const ProfileSpec& p, const std::string& key, const LineOf& line_of)
{
  if (!(p.width > 0.0) || !std::isfinite(p.width))
    fail(line_of, key + ".width", "must be positive");
  for (double v : {p.amplitude, p.center, p.wavenumber, p.phase})
    if (!std::isfinite(v))
      fail(line_of, key, "parameters must be finite");
}

void validate_with(const ExperimentConfig& cfg, const LineOf& line_of)
{
  if (!cfg.lebesgue) {
    try {
      cfg.spec.validate();
    } catch (const ValidationError& e) {
      fail(line_of, "measure", e.what());
    }
  }
  if (cfg.epsilons.empty())
    fail(line_of, "epsilons", "at least one epsilon is required");
  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
    const double e = cfg.epsilons[i];
    if (!(e > 0.0 && e <= 1.0))
      fail(line_of, "epsilons[" + std::to_string(i) + "]", "must lie in (0, 1]");
  }
  if (!(cfg.grid.length() > 0.0) || !std::isfinite(cfg.grid.length()))
    fail(line_of, "grid.length", "must be positive");
  if (cfg.grid.size() < 8 || (cfg.grid.size() & (cfg.grid.size() - 1)) != 0)
    fail(line_of, "grid.cells", "must be a power of two >= 8");
  if (!(cfg.T > 0.0) || !std::isfinite(cfg.T))
    fail(line_of, "T", "must be positive");
  if (!(cfg.dt > 0.0) || cfg.dt > cfg.T)
    fail(line_of, "solver.dt", "must lie in (0, T]");
  if (cfg.store_every < 1)
    fail(line_of, "solver.store_every", "must be >= 1");
  if (!(cfg.s > 0.5))
    fail(line_of, "s", "must exceed 1/2");
  if (cfg.replicas < 1)
    fail(line_of, "replicas", "must be >= 1");
  for (std::size_t i = 0; i < cfg.h_list.size(); ++i) {
    const double h = cfg.h_list[i];
    const std::string key = "h_list[" + std::to_string(i) + "]";
    if (!(h > 0.0 && h <= 1.0))
      fail(line_of, key, "must lie in (0, 1]");
    if (h < 2.0 * cfg.grid.dx())
      fail(line_of, key, "below the resolution limit 2*dx = " + std::to_string(2 * cfg.grid.dx()));
  }
  validate_profile(cfg.initial, "initial", line_of);
  for (std::size_t i = 0; i < cfg.profiles.size(); ++i)
    validate_profile(cfg.profiles[i], "profiles[" + std::to_string(i) + "]", line_of);
  for (std::size_t i = 0; i < cfg.thetas.size(); ++i)
    if (!std::isfinite(cfg.thetas[i]))
      fail(line_of, "thetas[" + std::to_string(i) + "]", "must be finite");
  if (!(cfg.leakage_tolerance > 0.0))
    fail(line_of, "leakage_tolerance", "must be positive");
  if (cfg.output_dir.empty())
    fail(line_of, "output_dir", "must not be empty");

  const auto& haar = cfg.haar;
  for (std::size_t i = 0; i < haar.indices.size(); ++i) {
    const auto& idx = haar.indices[i];
    const std::string key = "haar.indices[" + std::to_string(i) + "]";
    if (idx.N < 1 || (idx.N & (idx.N - 1)) != 0)
      fail(line_of, key, "N must be a power of two");
    if (1.0 / idx.N < 2.0 * cfg.grid.dx())
      fail(line_of, key, "scale 1/N is not resolved by the grid");
    if (idx.support_lo() < -0.5 * cfg.grid.length() || idx.support_hi() > 0.5 * cfg.grid.length())
      fail(line_of, key, "support leaves the domain");
  }
  for (std::size_t i = 0; i < haar.cumulants.size(); ++i) {
    const auto& c = haar.cumulants[i];
    const std::string key = "haar.cumulants[" + std::to_string(i) + "]";
    if (c.size() < 2 || c.size() > 4)
      fail(line_of, key, "order must be 2, 3 or 4");
    for (int pos : c)
      if (pos < 0 || static_cast<std::size_t>(pos) >= haar.indices.size())
        fail(line_of, key, "position " + std::to_string(pos) + " is not in haar.indices");
  }
  if (haar.moment_replicas > 0 && !(haar.moment_s > 0.5))
    fail(line_of, "haar.moment_s", "must exceed 1/2");
}

class Reader {
public:
  std::map<std::string, int> lines;

  static int line(const YAML::Node& n)
  {
    const auto m = n.Mark();
    return m.line >= 0 ? m.line + 1 : 0;
  }

  int line_of(const std::string& key) const
  {
    std::string k = key;
    for (;;) {
      if (auto it = lines.find(k); it != lines.end())
        return it->second;
      const auto cut = k.find_last_of(".[");
      if (cut == std::string::npos)
        return 0;
      k = k.substr(0, cut);
    }
  }

  template <class T> T get(const YAML::Node& n, const std::string& key, const char* what)
  {
    lines[key] = line(n);
    if (!n.IsScalar())
      throw ConfigError(key + ": expected " + what, line(n));
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(key + ": expected " + what + ", got '" + n.Scalar() + "'", line(n));
    }
  }

  double number(const YAML::Node& n, const std::string& key) { return get<double>(n, key, "a number"); }

  std::vector<double> numbers(const YAML::Node& n, const std::string& key)
  {
    lines[key] = line(n);
    if (!n.IsSequence())
      throw ConfigError(key + ": expected a list of numbers", line(n));
    std::vector<double> out;
    for (std::size_t i = 0; i < n.size(); ++i)
      out.push_back(number(n[i], key + "[" + std::to_string(i) + "]"));
    return out;
  }

  void require_map(const YAML::Node& n, const std::string& key)
  {
    lines[key] = line(n);
    if (!n.IsMap())
      throw ConfigError(key + ": expected a mapping", line(n));
  }

  /// Rejects keys outside `allowed`, anchored at the offending key.
  void check_keys(const YAML::Node& map, const std::string& prefix,
                  std::initializer_list<std::string_view> allowed)
  {
    for (const auto& kv : map) {
      const std::string k = kv.first.Scalar();
      bool ok = false;
      for (auto a : allowed)
        ok = ok || a == k;
      if (!ok)
        throw ConfigError((prefix.empty() ? "" : prefix + ".") + k + ": unknown key",
                          line(kv.first));
    }
  }

  ProfileSpec profile(const YAML::Node& n, const std::string& key)
  {
    require_map(n, key);
    check_keys(n, key, {"shape", "amplitude", "center", "width", "wavenumber", "phase"});
    ProfileSpec p;
    if (n["shape"]) {
      const auto name = get<std::string>(n["shape"], key + ".shape", "a shape name");
      if (name == "gaussian")
        p.shape = ProfileShape::Gaussian;
      else if (name == "gaussian_cos")
        p.shape = ProfileShape::GaussianCos;
      else if (name == "sech")
        p.shape = ProfileShape::Sech;
      else
        throw ConfigError(key + ".shape: unknown shape '" + name +
                              "' (gaussian, gaussian_cos, sech)",
                          line(n["shape"]));
    }
    auto opt = [&](const char* field, double& dst) {
      if (n[field])
        dst = number(n[field], key + "." + field);
    };
    opt("amplitude", p.amplitude);
    opt("center", p.center);
    opt("width", p.width);
    opt("wavenumber", p.wavenumber);
    opt("phase", p.phase);
    return p;
  }

  void measure(const YAML::Node& n, ExperimentConfig& cfg)
  {
    require_map(n, "measure");
    check_keys(n, "measure", {"kind", "a", "jumps"});
    if (!n["kind"])
      throw ConfigError("measure.kind: missing", line(n));
    const auto kind = get<std::string>(n["kind"], "measure.kind", "a measure kind");
    std::optional<double> a;
    if (n["a"])
      a = number(n["a"], "measure.a");
    if (kind == "lebesgue") {
      cfg.lebesgue = true;
      cfg.spec = LevySpec::poisson();
      return;
    }
    if (kind == "poisson") {
      cfg.spec = LevySpec::poisson(a.value_or(1.0));
    } else if (kind == "gamma") {
      cfg.spec = LevySpec::gamma(a.value_or(0.5));
    } else if (kind == "compound_poisson") {
      if (!n["jumps"])
        throw ConfigError("measure.jumps: required for compound_poisson", line(n));
      const auto& js = n["jumps"];
      lines["measure.jumps"] = line(js);
      if (!js.IsSequence() || js.size() == 0)
        throw ConfigError("measure.jumps: expected a nonempty list", line(js));
      std::vector<Jump> jumps;
      for (std::size_t i = 0; i < js.size(); ++i) {
        const std::string key = "measure.jumps[" + std::to_string(i) + "]";
        require_map(js[i], key);
        check_keys(js[i], key, {"size", "probability"});
        if (!js[i]["size"] || !js[i]["probability"])
          throw ConfigError(key + ": needs size and probability", line(js[i]));
        jumps.push_back({number(js[i]["size"], key + ".size"),
                         number(js[i]["probability"], key + ".probability")});
      }
      try {
        cfg.spec = LevySpec::compound_poisson(std::move(jumps), a.value_or(1.0));
      } catch (const Error& e) {
        throw ConfigError(std::string("measure.jumps: ") + e.what(), line(js));
      }
    } else {
      throw ConfigError("measure.kind: unknown kind '" + kind +
                            "' (poisson, compound_poisson, gamma, lebesgue)",
                        line(n["kind"]));
    }
    if (n["jumps"] && kind != "compound_poisson")
      throw ConfigError("measure.jumps: only valid for compound_poisson", line(n["jumps"]));
  }

  void haar(const YAML::Node& n, HaarSettings& h)
  {
    require_map(n, "haar");
    check_keys(n, "haar", {"indices", "cumulants", "moment_s", "moment_replicas"});
    if (const auto& ix = n["indices"]) {
      lines["haar.indices"] = line(ix);
      if (!ix.IsSequence())
        throw ConfigError("haar.indices: expected a list of [N, k] pairs", line(ix));
      for (std::size_t i = 0; i < ix.size(); ++i) {
        const std::string key = "haar.indices[" + std::to_string(i) + "]";
        lines[key] = line(ix[i]);
        if (!ix[i].IsSequence() || ix[i].size() != 2)
          throw ConfigError(key + ": expected [N, k]", line(ix[i]));
        h.indices.push_back(
            {get<int>(ix[i][0], key, "an integer"), get<int>(ix[i][1], key, "an integer")});
      }
    }
    if (const auto& cs = n["cumulants"]) {
      lines["haar.cumulants"] = line(cs);
      if (!cs.IsSequence())
        throw ConfigError("haar.cumulants: expected a list of position lists", line(cs));
      for (std::size_t i = 0; i < cs.size(); ++i) {
        const std::string key = "haar.cumulants[" + std::to_string(i) + "]";
        lines[key] = line(cs[i]);
        if (!cs[i].IsSequence())
          throw ConfigError(key + ": expected a list of positions", line(cs[i]));
        std::vector<int> pos;
        for (std::size_t j = 0; j < cs[i].size(); ++j)
          pos.push_back(get<int>(cs[i][j], key, "an integer"));
        h.cumulants.push_back(std::move(pos));
      }
    }
    if (n["moment_s"])
      h.moment_s = number(n["moment_s"], "haar.moment_s");
    if (n["moment_replicas"])
      h.moment_replicas =
          get<std::size_t>(n["moment_replicas"], "haar.moment_replicas", "a nonnegative integer");
  }
};

} // namespace

void ExperimentConfig::validate() const
{
  validate_with(*this, [](const std::string&) { return 0; });
}

ExperimentConfig parse_config(const std::string& text)
{
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("syntax error: " + e.msg, e.mark.line >= 0 ? e.mark.line + 1 : 0);
  }
  if (!root.IsMap())
    throw ConfigError("top level must be a mapping", Reader::line(root));

  Reader rd;
  rd.check_keys(root, "",
                {"measure", "epsilons", "grid", "solver", "initial", "T", "s", "replicas",
                 "master_seed", "h_list", "profiles", "thetas", "haar", "leakage_tolerance",
                 "output_dir"});
  for (const char* required : {"measure", "epsilons", "grid", "replicas", "master_seed"})
    if (!root[required])
      throw ConfigError(std::string(required) + ": missing required key", 1);

  ExperimentConfig cfg;
  rd.measure(root["measure"], cfg);
  cfg.epsilons = rd.numbers(root["epsilons"], "epsilons");

  const auto& g = root["grid"];
  rd.require_map(g, "grid");
  rd.check_keys(g, "grid", {"length", "cells"});
  if (!g["length"] || !g["cells"])
    throw ConfigError("grid: needs length and cells", Reader::line(g));
  const double length = rd.number(g["length"], "grid.length");
  const int cells = rd.get<int>(g["cells"], "grid.cells", "an integer");
  if (!(length > 0.0) || !std::isfinite(length))
    throw ConfigError("grid.length: must be positive", Reader::line(g["length"]));
  if (cells < 8 || (cells & (cells - 1)) != 0)
    throw ConfigError("grid.cells: must be a power of two >= 8", Reader::line(g["cells"]));
  cfg.grid = Grid(length, cells);

  if (const auto& sv = root["solver"]) {
    rd.require_map(sv, "solver");
    rd.check_keys(sv, "solver", {"dt", "store_every", "dealias"});
    if (sv["dt"])
      cfg.dt = rd.number(sv["dt"], "solver.dt");
    if (sv["store_every"])
      cfg.store_every = rd.get<int>(sv["store_every"], "solver.store_every", "an integer");
    if (sv["dealias"])
      cfg.dealias = rd.get<bool>(sv["dealias"], "solver.dealias", "true or false");
  }
  if (root["initial"])
    cfg.initial = rd.profile(root["initial"], "initial");
  if (root["T"])
    cfg.T = rd.number(root["T"], "T");
  if (root["s"])
    cfg.s = rd.number(root["s"], "s");
  {
    const auto& r = root["replicas"];
    const long long v = rd.get<long long>(r, "replicas", "an integer");
    if (v < 1)
      throw ConfigError("replicas: must be >= 1", Reader::line(r));
    cfg.replicas = static_cast<std::size_t>(v);
  }
  cfg.master_seed =
      rd.get<std::uint64_t>(root["master_seed"], "master_seed", "a nonnegative integer");
  if (root["h_list"])
    cfg.h_list = rd.numbers(root["h_list"], "h_list");
  if (const auto& ps = root["profiles"]) {
    rd.lines["profiles"] = Reader::line(ps);
    if (!ps.IsSequence())
      throw ConfigError("profiles: expected a list of profiles", Reader::line(ps));
    for (std::size_t i = 0; i < ps.size(); ++i)
      cfg.profiles.push_back(rd.profile(ps[i], "profiles[" + std::to_string(i) + "]"));
  }
  if (root["thetas"])
    cfg.thetas = rd.numbers(root["thetas"], "thetas");
  if (root["haar"])
    rd.haar(root["haar"], cfg.haar);
  if (root["leakage_tolerance"])
    cfg.leakage_tolerance = rd.number(root["leakage_tolerance"], "leakage_tolerance");
  if (root["output_dir"])
    cfg.output_dir = rd.get<std::string>(root["output_dir"], "output_dir", "a path");

  validate_with(cfg, [&](const std::string& key) { return rd.line_of(key); });
  return cfg;
}

ExperimentConfig load_config(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError("cannot open config file '" + path + "'", 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::uint64_t fnv1a64(std::string_view bytes)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

} // namespace sprinkle
