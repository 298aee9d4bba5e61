#include "nuc/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "nuc/error.hpp"

namespace nuc {

namespace {

void reject_unknown(const YAML::Node& node, const std::string& where, const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw ConfigError(where + " must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& where) {
  const YAML::Node v = node[key];
  if (!v) return;
  try {
    out = v.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + where);
  }
}

Sign parse_sign(const std::string& s) {
  if (s == "plus" || s == "+") return Sign::plus;
  if (s == "minus" || s == "-") return Sign::minus;
  throw ConfigError("sign must be plus or minus, got '" + s + "'");
}

SpacetimePoint parse_point(const YAML::Node& node, int s, const std::string& where) {
  std::vector<double> c;
  try {
    c = node.as<std::vector<double>>();
  } catch (const YAML::Exception&) {
    throw ConfigError("points in " + where + " must be lists of numbers");
  }
  if (static_cast<int>(c.size()) != s + 1)
    throw ConfigError("points in " + where + " need " + std::to_string(s + 1) + " coordinates (x0, x1, ...)");
  return {c[0], std::vector<double>(c.begin() + 1, c.end())};
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("scenario is not valid YAML: ") + e.what());
  }
  Scenario sc;
  if (!root || root.IsNull()) {
    validate(sc);
    return sc;
  }
  reject_unknown(root, "scenario",
                 {"name", "s", "grid", "r", "E", "p", "gamma", "epsilon", "h", "family_size", "svd_tolerance", "fock",
                  "K", "max_order", "eigenvectors", "support_eigenvectors", "refinement", "kernel", "scans", "configs",
                  "n_sweep", "seed"});
  read(root, "name", sc.name, "scenario");
  read(root, "s", sc.model.grid.s, "scenario");
  if (const auto g = root["grid"]) {
    reject_unknown(g, "grid", {"n", "pmax"});
    read(g, "n", sc.model.grid.n, "grid");
    read(g, "pmax", sc.model.grid.pmax, "grid");
  }
  read(root, "r", sc.model.r, "scenario");
  read(root, "E", sc.model.E, "scenario");
  read(root, "p", sc.p, "scenario");
  read(root, "gamma", sc.model.gamma, "scenario");
  read(root, "epsilon", sc.epsilon, "scenario");
  if (const auto h = root["h"]) {
    reject_unknown(h, "h", {"kind"});
    read(h, "kind", sc.h, "h");
  }
  read(root, "family_size", sc.model.family_size, "scenario");
  read(root, "svd_tolerance", sc.model.svd_tolerance, "scenario");
  if (const auto f = root["fock"]) {
    reject_unknown(f, "fock", {"n_max", "dimension_cap"});
    read(f, "n_max", sc.fock.n_max, "fock");
    read(f, "dimension_cap", sc.fock.dimension_cap, "fock");
  }
  read(root, "K", sc.K, "scenario");
  read(root, "max_order", sc.max_order, "scenario");
  read(root, "eigenvectors", sc.eigenvectors, "scenario");
  read(root, "support_eigenvectors", sc.support_eigenvectors, "scenario");
  read(root, "refinement", sc.refinement, "scenario");
  if (const auto k = root["kernel"]) {
    reject_unknown(k, "kernel", {"rho", "pad", "radii"});
    read(k, "rho", sc.kernel.rho, "kernel");
    read(k, "pad", sc.kernel.pad, "kernel");
    read(k, "radii", sc.kernel.radii, "kernel");
  }
  if (const auto scans = root["scans"]) {
    if (!scans.IsSequence()) throw ConfigError("scans must be a list");
    for (const auto& s : scans) {
      reject_unknown(s, "scans", {"index", "sign", "scan"});
      ScanRequest req;
      std::string sign = "plus";
      read(s, "index", req.index, "scans");
      read(s, "sign", sign, "scans");
      read(s, "scan", req.scan, "scans");
      req.sign = parse_sign(sign);
      sc.scans.push_back(req);
    }
  }
  if (const auto configs = root["configs"]) {
    if (!configs.IsSequence()) throw ConfigError("configs must be a list");
    for (const auto& c : configs) {
      reject_unknown(c, "configs", {"name", "points"});
      TranslationConfig tc;
      read(c, "name", tc.name, "configs");
      const std::string where = "config '" + tc.name + "'";
      if (!c["points"] || !c["points"].IsSequence()) throw ConfigError(where + " needs a list of points");
      for (const auto& p : c["points"]) tc.points.push_back(parse_point(p, sc.model.grid.s, where));
      sc.configs.push_back(std::move(tc));
    }
  }
  if (const auto n = root["n_sweep"]) {
    reject_unknown(n, "n_sweep", {"N", "delta", "profile", "tolerance"});
    read(n, "N", sc.n_sweep.N, "n_sweep");
    read(n, "delta", sc.n_sweep.delta, "n_sweep");
    read(n, "profile", sc.n_sweep.profile, "n_sweep");
    read(n, "tolerance", sc.n_sweep.tolerance, "n_sweep");
  }
  read(root, "seed", sc.seed, "scenario");
  validate(sc);
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

void validate(const Scenario& sc) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  const int s = sc.model.grid.s;
  if (s < 3)
    fail("s = " + std::to_string(s) +
         " is not supported: the nuclearity bounds need s >= 3, and for s = 2 the massless field is infrared "
         "singular");
  if (sc.model.grid.n <= 0 || sc.model.grid.n % 2) fail("grid.n must be positive and even");
  if (!(sc.model.grid.pmax > 0)) fail("grid.pmax must be positive");
  if (!(sc.model.r > 0)) fail("r must be positive");
  if (!(sc.model.E > 0)) fail("E must be positive");
  if (sc.model.E > sc.model.grid.pmax) fail("E must not exceed grid.pmax");
  if (!(sc.model.gamma >= 0.5 && sc.model.gamma < 0.5 * (s - 1)))
    fail("gamma must lie in [1/2, (s-1)/2), got " + std::to_string(sc.model.gamma));
  if (!(sc.epsilon > 0 && sc.epsilon < 1)) fail("epsilon must lie in (0, 1)");
  if (sc.p.empty()) fail("p must list at least one exponent");
  for (double p : sc.p)
    if (!(p > 0 && p <= 1)) fail("every p must lie in (0, 1]");
  if (sc.h != "bump-autocorrelation") fail("h.kind must be bump-autocorrelation");
  if (sc.model.family_size < 1) fail("family_size must be positive");
  if (!(sc.model.svd_tolerance > 0 && sc.model.svd_tolerance < 1)) fail("svd_tolerance must lie in (0, 1)");
  if (sc.fock.n_max < 1) fail("fock.n_max must be at least 1");
  if (sc.fock.dimension_cap < 1) fail("fock.dimension_cap must be positive");
  if (sc.K < 0) fail("K must be nonnegative");
  if (sc.max_order < 1) fail("max_order must be positive");
  if (sc.eigenvectors < 1) fail("eigenvectors must be positive");
  if (sc.support_eigenvectors < 1) fail("support_eigenvectors must be positive");
  for (int n : sc.refinement)
    if (n <= 0 || n % 2) fail("refinement grids must have positive even n");
  if (!(sc.kernel.rho > 0 && sc.kernel.pad > 0) || sc.kernel.radii < 1) fail("kernel needs rho, pad > 0 and radii >= 1");
  for (const auto& r : sc.scans) {
    if (r.index < 0) fail("scan index must be nonnegative");
    if (r.scan != "spatial" && r.scan != "half-ray") fail("scan must be spatial or half-ray, got '" + r.scan + "'");
  }
  const double wrap = 0.5 * sc.model.grid.n * std::numbers::pi / sc.model.grid.pmax;
  std::set<std::string> names;
  for (const auto& c : sc.configs) {
    if (c.name.empty()) fail("every config needs a name");
    if (!names.insert(c.name).second) fail("duplicate config name '" + c.name + "'");
    if (c.points.empty()) fail("config '" + c.name + "' has no points");
    if (delta_x(c.points) < 0) fail("config '" + c.name + "' has delta(x) < 0; the configurations must be spacelike");
    for (const auto& a : c.points)
      for (const auto& b : c.points)
        if ((a - b).spatial_norm() >= wrap)
          fail("config '" + c.name + "' has a spatial separation beyond the grid wrap radius");
  }
  for (int N : sc.n_sweep.N)
    if (N < 1) fail("n_sweep.N entries must be positive");
  if (sc.n_sweep.delta < 0) fail("n_sweep.delta must be nonnegative");
  for (double d : sc.n_sweep.profile)
    if (d < 0) fail("n_sweep.profile entries must be nonnegative");
  if (!(sc.n_sweep.tolerance > 0)) fail("n_sweep.tolerance must be positive");
}

nlohmann::ordered_json scenario_json(const Scenario& sc) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["name"] = sc.name;
  j["s"] = sc.model.grid.s;
  j["grid"] = {{"n", sc.model.grid.n}, {"pmax", sc.model.grid.pmax}};
  j["r"] = sc.model.r;
  j["E"] = sc.model.E;
  j["p"] = sc.p;
  j["gamma"] = sc.model.gamma;
  j["epsilon"] = sc.epsilon;
  j["h"] = {{"kind", sc.h}};
  j["family_size"] = sc.model.family_size;
  j["svd_tolerance"] = sc.model.svd_tolerance;
  j["fock"] = {{"n_max", sc.fock.n_max}, {"dimension_cap", sc.fock.dimension_cap}};
  j["K"] = sc.K;
  j["max_order"] = sc.max_order;
  j["eigenvectors"] = sc.eigenvectors;
  j["support_eigenvectors"] = sc.support_eigenvectors;
  j["refinement"] = sc.refinement;
  j["kernel"] = {{"rho", sc.kernel.rho}, {"pad", sc.kernel.pad}, {"radii", sc.kernel.radii}};
  j["scans"] = ordered_json::array();
  for (const auto& r : sc.scans)
    j["scans"].push_back({{"index", r.index}, {"sign", r.sign == Sign::plus ? "plus" : "minus"}, {"scan", r.scan}});
  j["configs"] = ordered_json::array();
  for (const auto& c : sc.configs) {
    ordered_json pts = ordered_json::array();
    for (const auto& p : c.points) {
      std::vector<double> v{p.time};
      v.insert(v.end(), p.space.begin(), p.space.end());
      pts.push_back(v);
    }
    j["configs"].push_back({{"name", c.name}, {"points", pts}});
  }
  j["n_sweep"] = {{"N", sc.n_sweep.N},
                  {"delta", sc.n_sweep.delta},
                  {"profile", sc.n_sweep.profile},
                  {"tolerance", sc.n_sweep.tolerance}};
  j["seed"] = sc.seed;
  return j;
}

}  // namespace nuc
