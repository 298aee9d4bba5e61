#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "nuc/localization.hpp"
#include "nuc/nuclearity.hpp"

namespace nuc {

struct FockOptions {
  int n_max = 6;
  Eigen::Index dimension_cap = kDefaultFockCap;
};

struct KernelOptions {
  double rho = 1.0;
  double pad = 0.25;
  int radii = 8;
};

/// One correlation scan: eigenvector index, sign and point set ("spatial" for x⁰ = 0
/// lattice rays, "half-ray" for x⁰ = |x⃗|/2).
struct ScanRequest {
  int index = 0;
  Sign sign = Sign::plus;
  std::string scan = "spatial";
};

struct NSweep {
  std::vector<int> N{2, 4, 8, 16};
  double delta = 50.0;
  std::vector<double> profile{0.0, 5.0, 20.0, 50.0, 100.0};
  double tolerance = 0.02;
};

struct Scenario {
  std::string name = "default";
  ModelParams model;
  std::vector<double> p{0.5, 1.0};
  double epsilon = 0.1;
  std::string h = "bump-autocorrelation";
  FockOptions fock;
  int K = 4;
  int max_order = 3;           // |μ̄| + |ν̄| for multi-point norms
  int eigenvectors = 1;        // eigenvectors in ladder arguments and in the calibration of Ĉ
  int support_eigenvectors = 5;
  std::vector<int> refinement{24, 32, 48};
  KernelOptions kernel;
  std::vector<ScanRequest> scans;
  std::vector<TranslationConfig> configs;
  NSweep n_sweep;
  std::uint64_t seed = 42;
};

/// Parses and validates a scenario. Throws ConfigError for unknown keys, malformed values
/// and parameters outside their admissible ranges.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& text);

void validate(const Scenario& sc);

nlohmann::ordered_json scenario_json(const Scenario& sc);

}  // namespace nuc
