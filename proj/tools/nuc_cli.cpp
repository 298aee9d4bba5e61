// nuc: scenario-driven front end for the nuclearity checks.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nuc/commands.hpp"

namespace {

struct Common {
  std::string scenario;
  std::string out;
  int threads = 1;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--scenario", c.scenario, "scenario YAML file (defaults apply when omitted)");
  sub->add_option("--out", c.out, "output directory; JSON goes to stdout when omitted");
  sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--seed", c.seed, "overrides the scenario seed");
}

int emit(const nuc::CommandOutput& o, const nuc::Session& session, const Common& c, const std::string& stem) {
  if (c.out.empty()) {
    std::cout << o.json(session.scenario().name, session.seed()).dump(2) << "\n";
    if (!o.attachments.empty()) std::cerr << "note: CSV output is written only with --out\n";
  } else {
    nuc::write_output(o, session, c.out, stem);
  }
  return nuc::exit_code(o);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nuclearity checks for the massless free scalar field on a momentum lattice"};
  app.require_subcommand(1);
  Common common;
  nuc::ScanRequest scan;
  std::string sign = "plus";

  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues, Schatten norms and refinement table of T");
  auto* corr = app.add_subcommand("corr-scan", "correlation scan for one eigenvector and sign");
  auto* kernel = app.add_subcommand("kernel-sweep", "inverse-square kernel norms against their bound");
  auto* fock = app.add_subcommand("fock-verify", "Fock-space oracles, energy bounds and the harmonic bound");
  auto* nucl = app.add_subcommand("nuclearity", "multi-point norms, the semibound and the N sweep");
  auto* full = app.add_subcommand("full", "every command into one run directory");
  for (auto* sub : {spectrum, corr, kernel, fock, nucl, full}) add_common(sub, common);
  corr->add_option("--index", scan.index, "eigenvector index")->check(CLI::NonNegativeNumber);
  corr->add_option("--sign", sign, "plus or minus")->check(CLI::IsMember({"plus", "minus"}));
  corr->add_option("--scan", scan.scan, "spatial or half-ray")->check(CLI::IsMember({"spatial", "half-ray"}));
  full->callback([&] {
    if (common.out.empty()) throw CLI::RequiredError("--out");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : nuc::kExitError;
  }

  return nuc::run_guarded(
      [&] {
        nuc::Scenario sc = common.scenario.empty() ? nuc::parse_scenario("") : nuc::load_scenario(common.scenario);
        nuc::Session session(std::move(sc), {common.threads, common.seed});
        if (*full) return nuc::cmd_full(session, common.out);
        if (*spectrum) return emit(nuc::cmd_spectrum(session), session, common, "spectrum");
        if (*corr) {
          scan.sign = sign == "plus" ? nuc::Sign::plus : nuc::Sign::minus;
          const std::string stem = "corr_scan_e" + std::to_string(scan.index) + "_" + sign + "_" + scan.scan;
          return emit(nuc::cmd_corr_scan(session, scan), session, common, stem);
        }
        if (*kernel) return emit(nuc::cmd_kernel_sweep(session), session, common, "kernel_sweep");
        if (*fock) return emit(nuc::cmd_fock_verify(session), session, common, "fock_verify");
        return emit(nuc::cmd_nuclearity(session), session, common, "nuclearity");
      },
      std::cerr);
}
