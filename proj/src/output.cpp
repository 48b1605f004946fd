#include "sprinkle/errors.hpp"
#include "sprinkle/experiments.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#ifndef SPRINKLE_VERSION
#define SPRINKLE_VERSION "0.0.0"
#endif

namespace sprinkle {

namespace {

using Json = nlohmann::ordered_json;

void put_h(Json& j, const std::optional<double>& h)
{
  if (h)
    j["h"] = *h;
}

std::string num(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string csv_field(const std::string& s)
{
  if (s.find_first_of(",\"") == std::string::npos)
    return s;
  std::string out = "\"";
  for (char c : s)
    out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

void write_file(const std::filesystem::path& path, const std::string& bytes)
{
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw Error("cannot write " + path.string());
  os << bytes;
  if (!os)
    throw Error("write failed for " + path.string());
}

} // namespace

std::string code_version()
{
  return SPRINKLE_VERSION;
}

void write_jsonl(std::ostream& os, const EnsembleResult& result)
{
  for (const auto& r : result.records) {
    Json j;
    j["type"] = "record";
    j["experiment"] = result.experiment;
    j["epsilon"] = r.epsilon;
    put_h(j, r.h);
    j["replica"] = r.replica;
    Json v = Json::object();
    for (const auto& [k, x] : r.values)
      v[k] = x;
    j["values"] = std::move(v);
    os << j.dump() << '\n';
  }
  for (const auto& a : result.aggregates) {
    Json j;
    j["type"] = "aggregate";
    j["experiment"] = result.experiment;
    j["metric"] = a.metric;
    j["epsilon"] = a.epsilon;
    put_h(j, a.h);
    j["mean"] = a.estimate.mean;
    j["se"] = a.estimate.se;
    j["count"] = a.estimate.count;
    if (a.reference)
      j["reference"] = *a.reference;
    os << j.dump() << '\n';
  }
  for (const auto& s : result.slopes) {
    Json j;
    j["type"] = "slope";
    j["experiment"] = result.experiment;
    j["metric"] = s.metric;
    put_h(j, s.h);
    j["slope"] = s.fit.slope;
    j["slope_se"] = s.fit.slope_se;
    j["intercept"] = s.fit.intercept;
    j["points"] = s.points;
    os << j.dump() << '\n';
  }
}

void write_summary_csv(std::ostream& os, const EnsembleResult& result)
{
  os << "kind,metric,epsilon,h,mean,se,count,reference\n";
  for (const auto& a : result.aggregates)
    os << "aggregate," << csv_field(a.metric) << ',' << num(a.epsilon) << ','
       << (a.h ? num(*a.h) : "") << ',' << num(a.estimate.mean) << ',' << num(a.estimate.se)
       << ',' << a.estimate.count << ',' << (a.reference ? num(*a.reference) : "") << '\n';
  for (const auto& s : result.slopes)
    os << "slope," << csv_field(s.metric) << ",," << (s.h ? num(*s.h) : "") << ','
       << num(s.fit.slope) << ',' << num(s.fit.slope_se) << ',' << s.points << ",\n";
}

void write_manifest(std::ostream& os, const Manifest& m)
{
  Json j;
  j["subcommand"] = m.subcommand;
  j["config_hash"] = m.config_hash;
  j["master_seed"] = m.master_seed;
  j["code_version"] = m.code_version;
  j["config_file"] = "config.yaml";
  j["outputs"] = {"results.jsonl", "summary.csv"};
  os << j.dump(2) << '\n';
}

void write_result_directory(const std::string& dir, const EnsembleResult& result,
                            const Manifest& manifest, const std::string& config_text)
{
  namespace fs = std::filesystem;
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec)
    throw Error("cannot create output directory " + dir + ": " + ec.message());
  std::ostringstream jl, csv, man;
  write_jsonl(jl, result);
  write_summary_csv(csv, result);
  write_manifest(man, manifest);
  write_file(root / "results.jsonl", jl.str());
  write_file(root / "summary.csv", csv.str());
  write_file(root / "manifest.json", man.str());
  write_file(root / "config.yaml", config_text);
}

} // namespace sprinkle
