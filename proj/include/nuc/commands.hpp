#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nuc/scenario.hpp"

namespace nuc {

constexpr int kSchemaVersion = 1;

/// Exit codes shared by every command.
enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitCertificate = 2, kExitInvariant = 3 };

/// One inequality lhs ≤ rhs, judged by margin = rhs − lhs ≥ −(tolerance + slack).
struct Check {
  std::string name;
  std::string anchor;
  double lhs = 0.0, rhs = 0.0;
  double tolerance = 0.0;
  double slack = 0.0;
  bool pass = false;

  double margin() const { return rhs - lhs; }
};

Check make_check(std::string name, std::string anchor, double lhs, double rhs, double tolerance, double slack = 0.0);

nlohmann::ordered_json check_json(const Check& c);

struct CommandOutput {
  std::string command;
  nlohmann::ordered_json body = nlohmann::ordered_json::object();
  std::vector<Check> checks;
  std::vector<std::pair<std::string, std::string>> attachments;   // file name, contents

  bool passed() const;
  /// {schema_version, command, scenario, seed, ...body, checks, pass}
  nlohmann::ordered_json json(const std::string& scenario, std::uint64_t seed) const;
};

struct RunOptions {
  int threads = 1;
  std::optional<std::uint64_t> seed;   // overrides the scenario seed
};

/// Shared state of one run: the scenario, the model built from it, and the calibrated
/// spacelike constant. Both are computed on first use.
class Session {
 public:
  Session(Scenario scenario, RunOptions options);

  const Scenario& scenario() const { return scenario_; }
  std::uint64_t seed() const { return seed_; }
  int threads() const { return options_.threads; }

  const Model& model();
  double c_hat();

 private:
  Scenario scenario_;
  RunOptions options_;
  std::uint64_t seed_;
  std::unique_ptr<Model> model_;
  std::optional<double> c_hat_;
};

CommandOutput cmd_spectrum(Session& session);
CommandOutput cmd_corr_scan(Session& session, const ScanRequest& request);
CommandOutput cmd_kernel_sweep(Session& session);
CommandOutput cmd_fock_verify(Session& session);
CommandOutput cmd_nuclearity(Session& session);

/// Runs every command into `out`: scenario.json, one JSON per command (plus CSV
/// attachments) and index.json with the overall verdict. Returns the exit code.
int cmd_full(Session& session, const std::filesystem::path& out);

/// Writes `output` as <command>.json plus its attachments into `dir`.
void write_output(const CommandOutput& output, const Session& session, const std::filesystem::path& dir,
                  const std::string& stem);

int exit_code(const CommandOutput& output);

/// Runs `fn` and maps escaping errors to exit codes: CertificateError to kExitCertificate,
/// everything else to kExitError, with a one-line message on `err`.
int run_guarded(const std::function<int()>& fn, std::ostream& err);

}  // namespace nuc
