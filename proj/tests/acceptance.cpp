// Acceptance run: one PASS/FAIL line per criterion on the shipped scenarios.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nuc/commands.hpp"
#include "nuc/error.hpp"

using namespace nuc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kStability = 0.05;
constexpr double kTraceFloor = 1e-12;        // relative, trace inequalities
constexpr double kSupport = 1e-6;
constexpr int kSupportCount = 5;
constexpr double kSpatialExponent = -0.7;   // −(s−2) + 0.3
constexpr double kRayExponent = -0.6;       // −(s−2−ε) + 0.3
constexpr double kUniform = 1e-10;
constexpr int kKernelRadii = 8;
constexpr double kWeyl = 1e-6;
constexpr double kCommutator = 1e-6;
constexpr double kEnergy = 1e-8;
constexpr int kEnergyTrials = 20;
constexpr double kExpansion = 1e-4;
constexpr double kHarmonic = 1e-6;
constexpr double kSpread = 0.05;
constexpr double kNIndependence = 0.02;
constexpr double kFarDelta = 50.0;

struct Line {
  int id;
  std::string title;
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& why) {
    if (!ok) {
      pass = false;
      detail << " [" << why << "]";
    }
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

std::string g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

const json* find_check(const json& report, const std::string& name) {
  for (const auto& c : report["checks"])
    if (c["name"] == name) return &c;
  return nullptr;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main() {
  const fs::path scenarios = NUC_SCENARIO_DIR;
  const fs::path root = fs::temp_directory_path() / "nuc_acceptance";
  fs::remove_all(root);
  const fs::path run_a = root / "a", run_b = root / "b";
  std::vector<Line> lines;
  for (int i = 1; i <= 9; ++i) lines.push_back({i, "", true, {}});
  lines[0].title = "Schatten norms stable between n=32 and n=48, Kosaki margins";
  lines[1].title = "minus correlations vanish outside 4r for the top 5 eigenvectors";
  lines[2].title = "spatial and spacelike-ray decay exponents, uniform bound";
  lines[3].title = "kernel bound at 8 radii in the valid zone";
  lines[4].title = "Fock oracles: Weyl vacuum, commutator, energy bounds, expansion";
  lines[5].title = "harmonic bound for N = 1, 2, 4";
  lines[6].title = "multi-point norms below the semibound for delta 0, 5, 20";
  lines[7].title = "pi-norm bound at delta=50 within 2% of N=1 for N up to 16; s=2 rejected";
  lines[8].title = "two full runs are byte-identical";

  try {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario def = load_scenario(scenarios / "default.yaml");
    {
      Session session(def, {});
      cmd_full(session, run_a);
    }
    std::cerr << "first full run: " << g(seconds_since(t0)) << " s\n";

    // 1
    {
      auto& L = lines[0];
      const json spec = load(run_a / "spectrum.json");
      const json* r32 = nullptr;
      const json* r48 = nullptr;
      for (const auto& row : spec["refinement"]) {
        if (row["n"] == 32) r32 = &row;
        if (row["n"] == 48) r48 = &row;
      }
      L.require(r32 && r48, "refinement table lacks n=32 or n=48");
      if (r32 && r48) {
        const std::vector<double> p = def.p;
        L.require(p.size() == 2 && p[0] == 0.5 && p[1] == 1.0, "p list is not {0.5, 1}");
        for (std::size_t k = 0; k < p.size(); ++k) {
          const double a = (*r32)["trace_norms"][k], b = (*r48)["trace_norms"][k];
          const double rel = std::abs(b - a) / std::abs(b);
          L.detail << " p=" << p[k] << ": " << g(a) << " -> " << g(b) << " (" << g(100 * rel) << "%)";
          L.require(std::isfinite(a) && std::isfinite(b) && rel < kStability, "change exceeds 5%");
        }
      }
      int kosaki = 0;
      double worst = 1e300;
      for (const auto& c : spec["checks"])
        if (c["paper_anchor"] == "kosaki_subadditivity") {
          ++kosaki;
          const double lhs = c["lhs"], rhs = c["rhs"];
          worst = std::min(worst, (rhs - lhs) / std::abs(rhs));
          L.require(rhs - lhs >= -kTraceFloor * std::abs(rhs), "Kosaki margin negative");
        }
      L.require(kosaki == 12, "expected 6 component pairs at 2 exponents");
      L.detail << "; " << kosaki << " Kosaki checks, worst relative margin " << g(worst);
    }

    // 2
    {
      auto& L = lines[1];
      const json spec = load(run_a / "spectrum.json");
      L.require(spec["support"].size() == kSupportCount, "support table does not cover 5 eigenvectors");
      double worst = 0;
      for (const auto& row : spec["support"]) {
        const double rel = row["relative"];
        worst = std::max(worst, rel);
        L.require(rel < kSupport, "support residual " + g(rel));
        L.require(double(row["inner_radius"]) >= 4 * def.model.r, "inner radius below 4r");
      }
      L.detail << " worst |C|/||g||^2 = " << g(worst);
    }

    // 3
    {
      auto& L = lines[2];
      const json spatial = load(run_a / "corr_scan_e0_plus_spatial.json");
      const json ray = load(run_a / "corr_scan_e0_plus_half-ray.json");
      const double es = spatial["fit"]["exponent"], er = ray["fit"]["exponent"];
      L.detail << " spatial exponent " << g(es) << ", ray exponent " << g(er);
      L.require(es <= kSpatialExponent, "spatial exponent above -0.7");
      L.require(er <= kRayExponent, "ray exponent above -0.6");
      for (const auto& name : {"corr_scan_e0_plus_spatial", "corr_scan_e0_plus_half-ray", "corr_scan_e0_minus_spatial"}) {
        const json rep = load(run_a / (std::string(name) + ".json"));
        for (const auto& c : rep["checks"])
          if (c["paper_anchor"] == "uniform_bound") {
            const double m = c["margin"];
            L.require(m >= -kUniform, std::string(name) + " uniform margin " + g(m));
          }
      }
    }

    // 4
    {
      auto& L = lines[3];
      const json ker = load(run_a / "kernel_sweep.json");
      const double zone = 3 * (double(ker["rho"]) + double(ker["pad"]));
      L.require(ker["radii"].size() == kKernelRadii, "sweep does not have 8 radii");
      double worst = 1e300;
      for (const auto& row : ker["radii"]) {
        const double m = double(row["bound"]) - double(row["computed"]);
        worst = std::min(worst, m);
        L.require(double(row["radius"]) >= zone - 1e-12, "radius outside the valid zone");
        L.require(m >= 0, "negative kernel margin at r=" + g(row["radius"]));
      }
      L.detail << " c_s=" << g(ker["inverse_square_constant"]) << " c_{s,rho,pad}=" << g(ker["cutoff_constant"])
               << ", worst margin " << g(worst);
    }

    // 5
    {
      auto& L = lines[4];
      const json fv = load(run_a / "fock_verify.json");
      const double werr = fv["weyl"]["max_error"], fnorm = fv["weyl"]["f_norm"];
      const double cerr = fv["commutator"]["max_relative_error"];
      L.require(std::abs(fnorm - 0.5) < 1e-12, "Weyl argument norm is not 0.5");
      L.require(werr <= kWeyl, "Weyl vacuum error " + g(werr));
      L.require(cerr <= kCommutator, "commutator error " + g(cerr));
      std::set<int> orders;
      for (const auto& row : fv["energy_bounds"]) {
        orders.insert(int(row["n"]));
        L.require(row["trials"] == kEnergyTrials, "energy trials != 20");
        const double m = double(row["worst_rhs"]) - double(row["worst_lhs"]);
        L.require(m >= -kEnergy, "energy-bound margin " + g(m));
      }
      L.require(orders == std::set<int>{1, 2}, "energy bounds not run at n = 1, 2");
      double worst_res = 0;
      L.require(fv["expansion"].size() == 2, "expected two one-photon functionals");
      for (const auto& row : fv["expansion"]) {
        L.require(row["residual"].size() == 7, "expansion not carried to K = 6");
        const double r = row["residual"].back();
        worst_res = std::max(worst_res, r);
        L.require(r < kExpansion, "expansion residual " + g(r));
      }
      L.detail << " Weyl " << g(werr) << ", commutator " << g(cerr) << ", expansion residual " << g(worst_res);
    }

    // 6
    {
      auto& L = lines[5];
      const json fv = load(run_a / "fock_verify.json");
      std::set<int> seen;
      double worst = 1e300;
      for (const auto& row : fv["harmonic"]) {
        const int N = row["N"];
        seen.insert(N);
        const double m = double(row["rhs"]) - double(row["lhs"]);
        const double slack = row["slack"];
        worst = std::min(worst, m);
        L.require(m >= -kHarmonic - slack, std::string(row["config"]) + " margin " + g(m));
        L.require(slack >= 0, "negative slack");
      }
      for (int N : {1, 2, 4}) L.require(seen.count(N) == 1, "no configuration with N = " + std::to_string(N));
      L.detail << " " << fv["harmonic"].size() << " configuration/sign pairs, worst margin " << g(worst);
    }

    // 7
    {
      auto& L = lines[6];
      const auto t1 = std::chrono::steady_clock::now();
      const Scenario far = load_scenario(scenarios / "far.yaml");
      Session far_session(far, {});
      const auto far_out = cmd_nuclearity(far_session);
      std::cerr << "far scenario: " << g(seconds_since(t1)) << " s\n";
      const json near = load(run_a / "nuclearity.json");
      const json farj = json::parse(far_out.json(far.name, far_session.seed()).dump());
      std::set<double> deltas;
      double worst_ratio = 0, worst_spread = 0;
      int pairs = 0;
      for (const json* rep : {&near, &farj})
        for (const auto& cfg : (*rep)["configs"]) {
          if (!cfg["delta"].is_null() && int(cfg["N"]) > 1) deltas.insert(std::round(double(cfg["delta"]) * 1e6) / 1e6);
          for (const auto& row : cfg["pairs"]) {
            ++pairs;
            L.require(int(row["order"]) <= 3, "pair order above 3");
            const double lhs = row["norm_sq"], rhs = row["semibound"], spread = row["spread"];
            worst_ratio = std::max(worst_ratio, lhs / rhs);
            worst_spread = std::max(worst_spread, spread);
            L.require(lhs <= rhs, std::string(cfg["name"]) + " " + std::string(row["pair"]) + " above the semibound");
            L.require(spread <= kSpread, std::string(cfg["name"]) + " restart spread " + g(spread));
          }
        }
      for (double d : {0.0, 5.0, 20.0}) L.require(deltas.count(d) == 1, "no configuration with delta = " + g(d));
      L.require(def.max_order == 3 && pairs > 0, "orders up to 3 not covered");
      L.detail << " " << pairs << " pairs, worst norm^2/semibound " << g(worst_ratio) << ", worst spread "
               << g(worst_spread);
    }

    // 8
    {
      auto& L = lines[7];
      const json near = load(run_a / "nuclearity.json");
      L.require(def.n_sweep.N == std::vector<int>{2, 4, 8, 16}, "N sweep is not {2, 4, 8, 16}");
      for (const auto& block : near["pi_norm"]) {
        L.detail << " p=" << double(block["p"]) << ":";
        for (const auto& row : block["rows"]) {
          if (double(row["delta"]) != kFarDelta) continue;
          const double ratio = row["ratio"];
          L.detail << " N=" << int(row["N"]) << " " << g(ratio);
          L.require(ratio - 1 <= kNIndependence,
                    "p=" + g(block["p"]) + " N=" + std::to_string(int(row["N"])) + " ratio " + g(ratio));
        }
      }
      bool rejected = false;
      try {
        parse_scenario("s: 2");
      } catch (const ConfigError& e) {
        rejected = std::string(e.what()).find("s >= 3") != std::string::npos;
      }
      L.require(rejected, "s = 2 scenario was not rejected with the documented error");
      L.detail << "; s=2 " << (rejected ? "rejected" : "accepted");
    }

    // 9
    {
      auto& L = lines[8];
      const auto t2 = std::chrono::steady_clock::now();
      {
        Session session(def, {});
        cmd_full(session, run_b);
      }
      std::cerr << "second full run: " << g(seconds_since(t2)) << " s\n";
      int files = 0;
      for (const auto& e : fs::directory_iterator(run_a)) {
        ++files;
        const fs::path other = run_b / e.path().filename();
        L.require(fs::exists(other) && slurp(e.path()) == slurp(other),
                  e.path().filename().string() + " differs");
      }
      int files_b = 0;
      for ([[maybe_unused]] const auto& e : fs::directory_iterator(run_b)) ++files_b;
      L.require(files == files_b && files > 0, "run directories list different files");
      L.detail << " " << files << " files compared";
    }
  } catch (const std::exception& e) {
    std::cout << "acceptance aborted: " << e.what() << "\n";
    return 1;
  }

  bool all = true;
  for (const auto& L : lines) {
    std::cout << "criterion " << L.id << ": " << (L.pass ? "PASS" : "FAIL") << "  " << L.title << " --"
              << L.detail.str() << "\n";
    all = all && L.pass;
  }
  fs::remove_all(root);
  return all ? 0 : 1;
}
