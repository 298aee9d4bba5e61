#include "nuc/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <limits>
#include <random>
#include <sstream>

#include "nuc/correlations.hpp"
#include "nuc/error.hpp"
#include "nuc/parallel.hpp"
#include "nuc/seed.hpp"

namespace nuc {

using nlohmann::ordered_json;

namespace {

// Oracle settings shared with the unit tests.
constexpr int kOracleOccupancy = 8;
constexpr double kOracleFNorm = 0.5;          // ‖f‖ of the Weyl argument, split 0.3 / 0.4
constexpr double kWeylTolerance = 1e-6;
constexpr double kCommutatorTolerance = 1e-6;
constexpr double kEnergyTolerance = 1e-8;
constexpr int kEnergyTrials = 20;
constexpr int kExpansionK = 6;
constexpr double kExpansionResidual = 1e-4;
constexpr int kSOrder = 4;
constexpr double kSTolerance = 1e-8;
constexpr int kTauSamples = 10;
constexpr double kHarmonicTolerance = 1e-6;
constexpr double kSupportTolerance = 1e-6;
constexpr double kStabilityTolerance = 0.05;
constexpr double kDecayAllowance = 0.3;
constexpr double kUniformTolerance = 1e-10;
constexpr double kSpacelikeTolerance = 1e-12;
constexpr double kSpreadGate = 0.05;
constexpr double kBracesTolerance = 1e-9;

SpacetimePoint origin_of(int s) { return {0.0, std::vector<double>(s, 0.0)}; }

ordered_json num(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

std::string label(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sign_word(Sign s) { return s == Sign::plus ? "plus" : "minus"; }

ordered_json point_json(const SpacetimePoint& x) {
  ordered_json a = ordered_json::array({x.time});
  for (double c : x.space) a.push_back(c);
  return a;
}

std::vector<SpacetimePoint> distinct(const std::vector<SpacetimePoint>& pts) {
  std::vector<SpacetimePoint> out;
  for (const auto& p : pts) {
    const bool seen = std::any_of(out.begin(), out.end(), [&](const SpacetimePoint& q) {
      return q.time == p.time && q.space == p.space;
    });
    if (!seen) out.push_back(p);
  }
  return out;
}

WeylArgument oracle_argument(const Model& m) {
  const auto& g = *m.grid;
  const SpVector fp = m.component(0, Sign::plus), fm = m.component(0, Sign::minus);
  return {0.6 * kOracleFNorm * fp / g.norm(fp), 0.8 * kOracleFNorm * fm / g.norm(fm)};
}

CVec gaussian(std::mt19937_64& rng, Eigen::Index count) {
  std::normal_distribution<double> nd;
  CVec c(count);
  for (auto& v : c) v = cplx(nd(rng), nd(rng));
  return c;
}

}  // namespace

Check make_check(std::string name, std::string anchor, double lhs, double rhs, double tolerance, double slack) {
  Check c{std::move(name), std::move(anchor), lhs, rhs, tolerance, slack, false};
  c.pass = std::isfinite(lhs) && std::isfinite(rhs) && c.margin() >= -(tolerance + slack);
  return c;
}

ordered_json check_json(const Check& c) {
  return {{"name", c.name},       {"paper_anchor", c.anchor}, {"lhs", num(c.lhs)},
          {"rhs", num(c.rhs)},    {"margin", num(c.margin())}, {"tolerance", num(c.tolerance)},
          {"slack", num(c.slack)}, {"pass", c.pass}};
}

bool CommandOutput::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

ordered_json CommandOutput::json(const std::string& scenario, std::uint64_t seed) const {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["scenario"] = scenario;
  j["seed"] = seed;
  for (const auto& [k, v] : body.items()) j[k] = v;
  j["checks"] = ordered_json::array();
  for (const auto& c : checks) j["checks"].push_back(check_json(c));
  j["pass"] = passed();
  return j;
}

int exit_code(const CommandOutput& output) { return output.passed() ? kExitOk : kExitInvariant; }

int run_guarded(const std::function<int()>& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const CertificateError& e) {
    err << "certificate failure: " << e.what() << "\n";
    return kExitCertificate;
  } catch (const ConfigError& e) {
    err << "scenario error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitError;
}

Session::Session(Scenario scenario, RunOptions options)
    : scenario_(std::move(scenario)), options_(options), seed_(options.seed.value_or(scenario_.seed)) {
  validate(scenario_);
  require(options_.threads >= 1, "threads must be positive");
}

const Model& Session::model() {
  if (!model_) model_ = std::make_unique<Model>(build_model(scenario_.model));
  return *model_;
}

double Session::c_hat() {
  if (!c_hat_)
    c_hat_ = calibrate_spacelike_constant(model(), scenario_.eigenvectors, scenario_.epsilon, seed_, threads());
  return *c_hat_;
}

CommandOutput cmd_spectrum(Session& session) {
  const Scenario& sc = session.scenario();
  const Model& m = session.model();
  const auto& spec = m.spectrum;
  CommandOutput out;
  out.command = "spectrum";
  auto& b = out.body;

  b["eigenvalues"] = std::vector<double>(spec.t.data(), spec.t.data() + spec.t.size());
  b["dimensions"] = {{"L_plus", m.lplus.dim()}, {"L_minus", m.lminus.dim()}};
  b["h"] = {{"kind", sc.h},
            {"scale", m.h.scale},
            {"min_in_window", m.h.min_in_window},
            {"sup_inv_sq", m.h.sup_inv_sq}};

  b["schatten"] = ordered_json::array();
  for (double p : sc.p) {
    const auto sub = subadditivity_check(spec, p);
    b["schatten"].push_back({{"p", p}, {"trace_norm", schatten_p(spec.t, p)}, {"component_sum", sub.rhs}});
    out.checks.push_back(make_check("schatten_subadditivity p=" + label(p), "schatten_subadditivity", sub.lhs, sub.rhs,
                                    kTraceRoundoff * std::abs(sub.rhs)));
  }
  for (std::size_t i = 0; i < spec.components.size(); ++i)
    for (std::size_t j = i + 1; j < spec.components.size(); ++j)
      for (double p : sc.p) {
        const auto& a = spec.components[i];
        const auto& c = spec.components[j];
        const auto k = kosaki_check(a.square, c.square, p);
        out.checks.push_back(make_check("kosaki " + a.name + "," + c.name + " p=" + label(p), "kosaki_subadditivity",
                                        k.lhs, k.rhs, kTraceRoundoff * std::abs(k.rhs)));
      }

  const int support = std::min<int>(sc.support_eigenvectors, static_cast<int>(spec.t.size()));
  b["support"] = ordered_json::array();
  for (int j = 0; j < support; ++j) {
    const auto sv = support_vanishing_check(*m.grid, correlation_source(m, j, Sign::minus), m.params.r);
    b["support"].push_back({{"index", j},
                            {"relative", sv.relative()},
                            {"inner_radius", sv.inner_radius},
                            {"outer_radius", sv.outer_radius},
                            {"points", sv.points}});
    out.checks.push_back(
        make_check("support_vanishing e" + std::to_string(j), "support_vanishing", sv.relative(), kSupportTolerance, 0.0));
  }

  // Refinement table at fixed pmax.
  std::vector<int> ns = sc.refinement;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  std::vector<std::vector<double>> traces;
  b["refinement"] = ordered_json::array();
  for (int n : ns) {
    std::unique_ptr<Model> own;
    const Model* mm = &m;
    if (n != sc.model.grid.n) {
      ModelParams params = sc.model;
      params.grid.n = n;
      own = std::make_unique<Model>(build_model(params));
      mm = own.get();
    }
    ordered_json row{{"n", n}, {"L_plus", mm->lplus.dim()}, {"L_minus", mm->lminus.dim()}};
    std::vector<double> tr;
    for (double p : sc.p) tr.push_back(schatten_p(mm->spectrum.t, p));
    row["trace_norms"] = tr;
    row["t0"] = mm->spectrum.t.size() ? mm->spectrum.t[0] : 0.0;
    b["refinement"].push_back(row);
    traces.push_back(tr);
  }
  if (ns.size() >= 2) {
    const std::size_t last = ns.size() - 1;
    for (std::size_t k = 0; k < sc.p.size(); ++k) {
      const double a = traces[last - 1][k], c = traces[last][k];
      out.checks.push_back(make_check("schatten_stability n=" + std::to_string(ns[last - 1]) + "," +
                                          std::to_string(ns[last]) + " p=" + label(sc.p[k]),
                                      "schatten_stability", std::abs(c - a) / std::abs(c), kStabilityTolerance, 0.0));
    }
  }
  return out;
}

CommandOutput cmd_corr_scan(Session& session, const ScanRequest& request) {
  const Scenario& sc = session.scenario();
  const Model& m = session.model();
  const MomentumGrid& g = *m.grid;
  const int s = g.dim();
  require(request.index < static_cast<int>(m.spectrum.t.size()), "eigenvector index " + std::to_string(request.index) +
                                                   " is out of range (" + std::to_string(m.spectrum.t.size()) +
                                                   " eigenvalues)");
  require(request.scan == "spatial" || request.scan == "half-ray", "scan must be spatial or half-ray");
  const bool spatial = request.scan == "spatial";
  const std::string tag = "e" + std::to_string(request.index) + "_" + sign_word(request.sign) + "_" + request.scan;

  CommandOutput out;
  out.command = "corr-scan";
  auto& b = out.body;

  const auto src = correlation_source(m, request.index, request.sign);
  const auto pts = ray_points(g, g.wrap_radius(), spatial ? 0.0 : 0.5);
  const auto scan = corr_scan(g, src, pts, session.threads());
  const auto moduli = scan.moduli();
  const auto sl = spacelike_decay_check(g, src, sc.epsilon, spacelike_sweeps(g, session.seed()), session.threads());
  const double t2 = src.t * src.t;
  const double ubound = uniform_bound(m, src.t);

  std::ostringstream csv;
  csv << "x0,x1,x2,x3,re,im,modulus,bound,margin\n";
  double worst_ratio = 0, max_modulus = 0;
  std::vector<double> radii;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& x = pts[i];
    const double bound = sl.calibrated_constant * t2 / spacelike_weight(x, s, sc.epsilon);
    worst_ratio = std::max(worst_ratio, moduli[i] / bound);
    max_modulus = std::max(max_modulus, moduli[i]);
    radii.push_back(x.spatial_norm());
    csv << csv_number(x.time);
    for (int a = 0; a < 3; ++a) csv << ',' << csv_number(a < s ? x.space[a] : 0.0);
    csv << ',' << csv_number(scan.values[i].real()) << ',' << csv_number(scan.values[i].imag()) << ','
        << csv_number(moduli[i]) << ',' << csv_number(bound) << ',' << csv_number(bound - moduli[i]) << '\n';
  }
  out.attachments.emplace_back("corr_scan_" + tag + ".csv", csv.str());

  b["source"] = {{"index", request.index}, {"sign", sign_word(request.sign)}, {"t", src.t}, {"norm2", src.norm2}};
  b["scan"] = request.scan;
  b["points"] = pts.size();
  b["csv"] = "corr_scan_" + tag + ".csv";
  b["calibrated_constant"] = sl.calibrated_constant;
  b["spacelike_test_worst_ratio"] = sl.worst_ratio;
  b["uniform_bound"] = ubound;

  const auto [lo, hi] = default_fit_window(g, m.params.r);
  double lattice_max = 0;
  if (request.sign == Sign::plus) {
    DecayFit fit;
    if (spatial) {
      const auto d = spatial_decay_fit(m, src, lo, hi);
      fit = d.fit;
      lattice_max = d.uniform_bound - d.worst_uniform_margin;
      out.checks.push_back(make_check("spatial_decay " + tag, "spatial_decay", fit.exponent,
                                      -(s - 2) + kDecayAllowance, 0.0));
    } else {
      fit = fit_power_law(radii, moduli, lo, hi);
      out.checks.push_back(make_check("spacelike_ray_decay " + tag, "spacelike_decay", fit.exponent,
                                      -(s - 2 - sc.epsilon) + kDecayAllowance, 0.0));
    }
    b["fit"] = {{"exponent", fit.exponent},   {"amplitude", fit.amplitude}, {"residual", fit.residual},
                {"window_lo", fit.window_lo}, {"window_hi", fit.window_hi}, {"radii_used", fit.radii_used}};
  } else if (spatial) {
    const auto sv = support_vanishing_check(g, src, m.params.r);
    b["support_relative"] = sv.relative();
    out.checks.push_back(make_check("support_vanishing " + tag, "support_vanishing", sv.relative(), kSupportTolerance, 0.0));
  }
  out.checks.push_back(make_check("spacelike_bound " + tag, "spacelike_decay", worst_ratio, 1.0, kSpacelikeTolerance));
  out.checks.push_back(make_check("uniform_bound " + tag, "uniform_bound", std::max(max_modulus, lattice_max), ubound,
                                  kUniformTolerance));
  return out;
}

CommandOutput cmd_kernel_sweep(Session& session) {
  const Scenario& sc = session.scenario();
  const Model& m = session.model();
  const MomentumGrid& g = *m.grid;
  const int s = g.dim();
  CommandOutput out;
  out.command = "kernel-sweep";
  auto& b = out.body;

  const auto sweep = kernel_sweep(g, sc.kernel.rho, sc.kernel.pad, sc.kernel.radii, session.seed(), session.threads());
  const auto split = inverse_square_split(g);
  b["rho"] = sc.kernel.rho;
  b["pad"] = sc.kernel.pad;
  b["inverse_square_constant"] = inverse_square_constant(s);
  b["cutoff_constant"] = cutoff_constant(s, sc.kernel.rho, sc.kernel.pad);
  b["split"] = {{"l2_part", split.l2_part}, {"sup_remainder", split.sup_remainder}};
  b["csv"] = "kernel_sweep.csv";
  b["radii"] = ordered_json::array();

  std::ostringstream csv;
  csv << "radius,computed,bound,margin,iterations,restart_spread\n";
  for (const auto& k : sweep) {
    csv << csv_number(k.radius) << ',' << csv_number(k.computed) << ',' << csv_number(k.bound) << ','
        << csv_number(k.margin()) << ',' << k.iterations << ',' << csv_number(k.restart_spread) << '\n';
    b["radii"].push_back({{"radius", k.radius},
                          {"computed", k.computed},
                          {"bound", k.bound},
                          {"iterations", k.iterations},
                          {"restart_spread", k.restart_spread}});
    out.checks.push_back(make_check("kernel_bound r=" + label(k.radius), "kernel_bound", k.computed, k.bound, 0.0));
  }
  out.attachments.emplace_back("kernel_sweep.csv", csv.str());
  return out;
}

CommandOutput cmd_fock_verify(Session& session) {
  const Scenario& sc = session.scenario();
  const Model& m = session.model();
  const MomentumGrid& g = *m.grid;
  const SpacetimePoint o = origin_of(g.dim());
  const int count = std::min<int>(sc.eigenvectors, static_cast<int>(m.spectrum.t.size()));
  CommandOutput out;
  out.command = "fock-verify";
  auto& b = out.body;
  std::mt19937_64 rng(mix_seed(session.seed(), 0xF0C));

  // Weyl oracle: vacuum expectation against e^{−‖f‖²/2}.
  {
    const ModeSet ms = translated_modes(m, 1, {o});
    const TruncatedFock f = build_fock(ms.count(), kOracleOccupancy, sc.fock.dimension_cap);
    const WeylArgument wa = oracle_argument(m);
    const double n2 = g.inner_norm2(wa.full());
    double err = std::abs(weyl(f, ms.coefficients(wa.full()))(0, 0) - std::exp(-0.5 * n2));
    for (int trial = 0; trial < 5; ++trial) {
      CVec c = gaussian(rng, ms.count());
      c *= kOracleFNorm / c.norm();
      err = std::max(err, std::abs(weyl(f, c)(0, 0) - std::exp(-0.5 * kOracleFNorm * kOracleFNorm)));
    }
    b["weyl"] = {{"f_norm", std::sqrt(n2)}, {"n_max", kOracleOccupancy}, {"max_error", err}};
    out.checks.push_back(make_check("weyl_vacuum", "weyl_vacuum", err, 0.0, kWeylTolerance));

    // [a(e1), [a*(e2), W(f)]] = ⟨e1|if⟩⟨if|e2⟩ W(f) in the vacuum.
    const SpVector iff = cplx(0, 1) * wa.full();
    const CMat w = weyl(f, ms.coefficients(wa.full()));
    double cerr = 0;
    for (int trial = 0; trial < 4; ++trial) {
      const SpVector e1 = ms.synthesize(gaussian(rng, ms.count()));
      const SpVector e2 = ms.synthesize(gaussian(rng, ms.count()));
      const CMat a1 = CMat(annihilator(f, ms.coefficients(e1)));
      const CMat c2 = CMat(creator(f, ms.coefficients(e2)));
      const CMat inner = c2 * w - w * c2;
      const CMat outer = a1 * inner - inner * a1;
      const cplx expected = std::exp(-0.5 * n2) * g.inner(e1, iff) * g.inner(iff, e2);
      cerr = std::max(cerr, std::abs(outer(0, 0) - expected) / std::max(1.0, std::abs(expected)));
    }
    b["commutator"] = {{"trials", 4}, {"max_relative_error", cerr}};
    out.checks.push_back(make_check("commutator_identity", "commutator_identity", cerr, 0.0, kCommutatorTolerance));

    // Expansion of one-photon functionals at K = 6.
    RankOneFunctional diag{CVec::Zero(f.dimension()), CVec::Zero(f.dimension())};
    diag.psi[f.index_of({1, 0})] = 0.6;
    diag.psi[f.index_of({0, 1})] = 0.8;
    diag.psi_prime = diag.psi;
    RankOneFunctional off{CVec::Zero(f.dimension()), CVec::Zero(f.dimension())};
    off.psi[f.index_of({1, 0})] = 1.0;
    off.psi_prime[f.index_of({0, 1})] = 1.0;
    b["expansion"] = ordered_json::array();
    for (const auto& [name, phi] : {std::pair<std::string, const RankOneFunctional*>{"one_photon_diagonal", &diag},
                                    {"one_photon_off_diagonal", &off}}) {
      const auto ex = expansion_check(m, f, ms, *phi, wa, kExpansionK);
      b["expansion"].push_back({{"functional", name}, {"terms", ex.terms}, {"residual", ex.residual}});
      out.checks.push_back(make_check("weyl_expansion " + name, "weyl_expansion", ex.residual.back(), kExpansionResidual, 0.0));
    }
  }

  // Energy bounds on a two-point mode set, 20 seeded trials per order.
  {
    const ModeSet ms = translated_modes(m, 1, {o, SpacetimePoint{1.0, [&] {
                                                   std::vector<double> v(g.dim(), 0.0);
                                                   v[0] = 6.0;
                                                   return v;
                                                 }()}});
    const TruncatedFock f = build_fock(ms.count(), sc.fock.n_max, sc.fock.dimension_cap);
    const auto proj = energy_projection(f, ms, m.params.E);
    b["energy_bounds"] = ordered_json::array();
    for (int n : {1, 2}) {
      BoundCheck worst{0.0, std::numeric_limits<double>::infinity(), 0.0};
      for (int trial = 0; trial < kEnergyTrials; ++trial) {
        std::vector<CVec> args;
        for (int k = 0; k < n; ++k) args.push_back(gaussian(rng, ms.count()));
        const auto c = energy_bound_check(f, ms, proj, args);
        if (c.margin() < worst.margin()) worst = c;
      }
      b["energy_bounds"].push_back({{"n", n}, {"trials", kEnergyTrials}, {"worst_lhs", worst.lhs}, {"worst_rhs", worst.rhs}});
      out.checks.push_back(make_check("energy_bound n=" + std::to_string(n), "energy_bounds", worst.lhs, worst.rhs,
                                      kEnergyTolerance));
    }
  }

  // S against its energy estimate, τ against its norm bound, and the series majorant.
  {
    const ModeSet ms = translated_modes(m, count, {o});
    const TruncatedFock f = build_fock(ms.count(), sc.fock.n_max, sc.fock.dimension_cap);
    const auto proj = energy_projection(f, ms, m.params.E);
    const auto args = ladder_arguments(m, count);
    const int order = std::max(kSOrder, sc.K);
    const auto pairs = enumerate_pairs(count, order, false);
    double worst_margin = std::numeric_limits<double>::infinity();
    double worst_lhs = 0, worst_rhs = 0;
    std::string worst_label;
    std::vector<std::pair<int, double>> products;   // order, ‖τ‖‖S‖
    for (const auto& pair : pairs) {
      const auto S = S_functional(m, f, ms, proj, pair, args);
      if (pair.order() <= kSOrder && S.estimate - S.norm < worst_margin) {
        worst_margin = S.estimate - S.norm;
        worst_lhs = S.norm;
        worst_rhs = S.estimate;
        worst_label = index_label(pair);
      }
      products.emplace_back(pair.order(), tau_norm_bound(pair) * S.norm);
    }
    b["S"] = {{"eigenvectors", count},   {"pairs", pairs.size()}, {"fock_dimension", f.dimension()},
              {"rank", proj.rank()},     {"max_occupancy", proj.max_occupancy}, {"truncated", proj.truncated},
              {"worst_pair", worst_label}};
    out.checks.push_back(make_check("S_estimate " + worst_label, "ladder_estimate", worst_lhs, worst_rhs, kSTolerance));

    std::uniform_real_distribution<double> u(-1, 1);
    const int tcount = std::min<int>(3, static_cast<int>(m.spectrum.t.size()));
    const auto tpairs = enumerate_pairs(tcount, kSOrder, false);
    double worst_tau = 0;
    for (int trial = 0; trial < kTauSamples; ++trial) {
      SpVector fp = SpVector::Zero(g.size()), fm = fp;
      for (int j = 0; j < tcount; ++j) {
        fp += u(rng) * m.component(j, Sign::plus);
        fm += u(rng) * m.component(j, Sign::minus);
      }
      const double scale = 1.0 / std::sqrt(g.inner_norm2(fp) + g.inner_norm2(fm));
      const WeylArgument wa{fp * scale, fm * scale};
      CVec ep(tcount), em(tcount);
      for (int j = 0; j < tcount; ++j) {
        ep[j] = g.inner(m.spectrum.vectors.col(j), wa.plus);
        em[j] = g.inner(m.spectrum.vectors.col(j), wa.minus);
      }
      for (const auto& pair : tpairs)
        worst_tau = std::max(worst_tau, std::abs(tau_functional(pair, ep, em, g.inner_norm2(wa.full()))) /
                                            tau_norm_bound(pair));
    }
    b["tau"] = {{"samples", kTauSamples}, {"pairs", tpairs.size()}, {"max_ratio", worst_tau}};
    out.checks.push_back(make_check("tau_estimate", "tau_estimate", worst_tau, 1.0, 0.0));

    b["series"] = ordered_json::array();
    for (double p : sc.p) {
      const double trace = schatten_p(m.spectrum.t, p);
      double lhs = 0, series = 0;
      for (const auto& [ord, v] : products)
        if (ord <= sc.K) lhs += std::pow(v, p);
      for (int k = 0; k <= sc.K; ++k)
        series += std::pow(32 * m.params.E, 0.5 * p * k) * std::pow(trace, k) / std::pow(std::tgamma(k + 1.0), 0.5 * p);
      const double rhs = std::pow(series, 4);
      b["series"].push_back({{"p", p}, {"K", sc.K}, {"computed", lhs}, {"majorant", rhs}});
      out.checks.push_back(make_check("series_majorant p=" + label(p), "series_majorant", lhs, rhs, 0.0));
    }
  }

  // Harmonic bound on every scenario configuration.
  b["harmonic"] = ordered_json::array();
  for (const auto& cfg : sc.configs) {
    const auto pts = cfg.points;
    const ModeSet ms = translated_modes(m, 1, distinct(pts));
    const TruncatedFock f = build_fock(ms.count(), sc.fock.n_max, sc.fock.dimension_cap);
    const auto proj = energy_projection(f, ms, m.params.E);
    for (Sign sg : {Sign::plus, Sign::minus}) {
      const auto hb = harmonic_bound_check(m, f, ms, proj, m.component(0, sg), pts);
      b["harmonic"].push_back({{"config", cfg.name},
                               {"sign", sign_word(sg)},
                               {"N", pts.size()},
                               {"lhs", hb.lhs},
                               {"rhs", hb.rhs},
                               {"slack", hb.slack}});
      out.checks.push_back(make_check("harmonic_bound " + cfg.name + " " + sign_word(sg), "harmonic_bound", hb.lhs,
                                      hb.rhs, kHarmonicTolerance, hb.slack));
    }
  }
  return out;
}

CommandOutput cmd_nuclearity(Session& session) {
  const Scenario& sc = session.scenario();
  const Model& m = session.model();
  const int s = m.grid->dim();
  const int count = std::min<int>(sc.eigenvectors, static_cast<int>(m.spectrum.t.size()));
  CommandOutput out;
  out.command = "nuclearity";
  auto& b = out.body;

  const SemiboundInputs in = semibound_inputs(m, session.c_hat(), sc.epsilon);
  b["c_hat"] = in.c_hat;
  b["sup_inv_sq"] = in.sup_inv_sq;
  b["E"] = in.E;

  // Multi-point norms against the semibound.
  const auto pairs = enumerate_pairs(count, sc.max_order, true);
  b["configs"] = ordered_json::array();
  for (std::size_t ci = 0; ci < sc.configs.size(); ++ci) {
    const auto& cfg = sc.configs[ci];
    const int N = static_cast<int>(cfg.points.size());
    const double delta = delta_x(cfg.points);
    const ModeSet ms = translated_modes(m, count, distinct(cfg.points));
    const TruncatedFock f = build_fock(ms.count(), sc.fock.n_max, sc.fock.dimension_cap);
    const auto proj = energy_projection(f, ms, m.params.E);
    std::vector<MultiNorm> norms(pairs.size());
    parallel_for(pairs.size(), session.threads(), [&](std::size_t k) {
      norms[k] = multi_norm_bruteforce(m, f, ms, proj, pairs[k], cfg.points, mix_seed(session.seed(), ci * 4096 + k));
    });
    ordered_json rows = ordered_json::array();
    double worst_ratio = -1, worst_lhs = 0, worst_rhs = 0, worst_spread = 0;
    std::string worst_label;
    bool stagnated = false;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& mn = norms[k];
      const double rhs = semibound_rhs(pairs[k], m.spectrum.t, N, N > 1 ? delta : 0.0, in);
      const double lhs = mn.value * mn.value;
      rows.push_back({{"pair", index_label(pairs[k])},
                      {"order", pairs[k].order()},
                      {"norm", mn.value},
                      {"norm_sq", lhs},
                      {"semibound", rhs},
                      {"spread", mn.spread},
                      {"iterations", mn.iterations},
                      {"stagnated", mn.stagnated}});
      if (lhs / rhs > worst_ratio) {
        worst_ratio = lhs / rhs;
        worst_lhs = lhs;
        worst_rhs = rhs;
        worst_label = index_label(pairs[k]);
      }
      worst_spread = std::max(worst_spread, mn.spread);
      stagnated = stagnated || mn.stagnated;
    }
    ordered_json pts = ordered_json::array();
    for (const auto& x : cfg.points) pts.push_back(point_json(x));
    b["configs"].push_back({{"name", cfg.name},
                            {"points", pts},
                            {"N", N},
                            {"delta", num(delta)},
                            {"modes", ms.count()},
                            {"fock_dimension", f.dimension()},
                            {"rank", proj.rank()},
                            {"truncated", proj.truncated},
                            {"stagnated", stagnated},
                            {"pairs", rows}});
    if (!pairs.empty()) {
      out.checks.push_back(
          make_check("semibound " + cfg.name + " " + worst_label, "semibound", worst_lhs, worst_rhs, 0.0));
      out.checks.push_back(make_check("restart_spread " + cfg.name, "restart_spread", worst_spread, kSpreadGate, 0.0));
    }
  }

  // Π_E bound over N and δ, relative to its N = 1 value.
  b["pi_norm"] = ordered_json::array();
  for (double p : sc.p) {
    const double trace = schatten_p(m.spectrum.t, p);
    const auto one = pi_norm_bound(p, trace, 1, 0.0, in);
    ordered_json rows = ordered_json::array();
    for (int N : sc.n_sweep.N) {
      double prev = std::numeric_limits<double>::infinity(), rise = 0;
      for (double d : sc.n_sweep.profile) {
        const auto bnd = pi_norm_bound(p, trace, N, d, in);
        const double ratio = std::pow(10.0, bnd.log10_value - one.log10_value);
        rows.push_back({{"N", N}, {"delta", d}, {"log10_bound", bnd.log10_value}, {"ratio", ratio}, {"braces", bnd.braces}});
        if (std::isfinite(prev)) rise = std::max(rise, bnd.log10_value - prev);
        prev = bnd.log10_value;
      }
      const auto at = pi_norm_bound(p, trace, N, sc.n_sweep.delta, in);
      const double ratio = std::pow(10.0, at.log10_value - one.log10_value);
      const std::string tag = "p=" + label(p) + " N=" + std::to_string(N);
      out.checks.push_back(make_check("delta_monotone " + tag, "pi_norm_monotone", rise, 0.0, 0.0));
      out.checks.push_back(make_check("braces_mechanism " + tag, "braces_mechanism", ratio,
                                      std::sqrt(braces_factor(N, sc.n_sweep.delta, s, sc.epsilon)), kBracesTolerance));
      out.checks.push_back(make_check("n_independence " + tag + " delta=" + label(sc.n_sweep.delta), "n_independence",
                                      ratio - 1.0, sc.n_sweep.tolerance, 0.0));
    }
    b["pi_norm"].push_back({{"p", p},
                            {"trace_norm", trace},
                            {"log10_one_point", one.log10_value},
                            {"series_terms", one.series.terms},
                            {"series_log_tail", one.series.log_tail},
                            {"rows", rows}});
  }

  // Static p-nuclear estimate from the computed S norms at one point.
  {
    const ModeSet ms = translated_modes(m, count, {origin_of(s)});
    const TruncatedFock f = build_fock(ms.count(), sc.fock.n_max, sc.fock.dimension_cap);
    const auto proj = energy_projection(f, ms, m.params.E);
    const auto args = ladder_arguments(m, count);
    std::vector<StaticTerm> terms;
    for (const auto& pair : enumerate_pairs(count, sc.K, false))
      terms.push_back({pair.order(), tau_norm_bound(pair), S_functional(m, f, ms, proj, pair, args).norm});
    b["static"] = ordered_json::array();
    for (double p : sc.p) {
      const auto e = p_nuclear_static(terms, p, sc.K, m.params.E, schatten_p(m.spectrum.t, p));
      b["static"].push_back({{"p", p}, {"K", sc.K}, {"partial", e.partial}, {"log10_tail", num(e.log10_tail)},
                             {"max_occupancy", proj.max_occupancy}});
    }
  }
  return out;
}

void write_output(const CommandOutput& output, const Session& session, const std::filesystem::path& dir,
                  const std::string& stem) {
  std::filesystem::create_directories(dir);
  const auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (dir / name).string());
    f << text;
  };
  write(stem + ".json", output.json(session.scenario().name, session.seed()).dump(2) + "\n");
  for (const auto& [name, text] : output.attachments) write(name, text);
}

int cmd_full(Session& session, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  {
    ordered_json j{{"schema_version", kSchemaVersion}, {"seed", session.seed()}};
    j["scenario"] = scenario_json(session.scenario());
    std::ofstream f(out / "scenario.json", std::ios::binary);
    if (!f) throw Error("cannot write " + (out / "scenario.json").string());
    f << j.dump(2) << "\n";
  }
  ordered_json index{{"schema_version", kSchemaVersion},
                     {"scenario", session.scenario().name},
                     {"seed", session.seed()},
                     {"commands", ordered_json::array()}};
  bool all = true;
  const auto record = [&](const CommandOutput& o, const std::string& stem) {
    write_output(o, session, out, stem);
    ordered_json failed = ordered_json::array();
    for (const auto& c : o.checks)
      if (!c.pass) failed.push_back(c.name);
    index["commands"].push_back(
        {{"command", o.command}, {"file", stem + ".json"}, {"pass", o.passed()}, {"checks", o.checks.size()}, {"failed", failed}});
    all = all && o.passed();
  };
  record(cmd_spectrum(session), "spectrum");
  for (const auto& req : session.scenario().scans)
    record(cmd_corr_scan(session, req),
           "corr_scan_e" + std::to_string(req.index) + "_" + sign_word(req.sign) + "_" + req.scan);
  record(cmd_kernel_sweep(session), "kernel_sweep");
  record(cmd_fock_verify(session), "fock_verify");
  record(cmd_nuclearity(session), "nuclearity");
  index["pass"] = all;
  std::ofstream f(out / "index.json", std::ios::binary);
  if (!f) throw Error("cannot write " + (out / "index.json").string());
  f << index.dump(2) << "\n";
  return all ? kExitOk : kExitInvariant;
}

}  // namespace nuc
