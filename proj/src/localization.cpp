#include "nuc/localization.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "nuc/error.hpp"
#include "nuc/linalg.hpp"

namespace nuc {

namespace {

using Profile = std::function<double(const std::vector<double>&)>;

std::vector<std::pair<std::string, Profile>> family_generators(int s) {
  std::vector<std::pair<std::string, Profile>> g;
  const char* axis = "xyzuvw";
  auto name = [&](int a) { return std::string(1, a < 6 ? axis[a] : '?'); };
  g.emplace_back("1", [](const std::vector<double>&) { return 1.0; });
  for (int a = 0; a < s; ++a) g.emplace_back(name(a), [a](const std::vector<double>& u) { return u[a]; });
  for (int a = 0; a < s; ++a)
    g.emplace_back(name(a) + "^2", [a](const std::vector<double>& u) { return u[a] * u[a]; });
  for (int a = 0; a < s; ++a)
    for (int b = a + 1; b < s; ++b)
      g.emplace_back(name(a) + name(b), [a, b](const std::vector<double>& u) { return u[a] * u[b]; });
  const double pi = std::numbers::pi;
  for (int a = 0; a < std::min(s, 3); ++a) {
    g.emplace_back("cos(pi " + name(a) + ")", [a, pi](const std::vector<double>& u) { return std::cos(pi * u[a]); });
    g.emplace_back("sin(pi " + name(a) + ")", [a, pi](const std::vector<double>& u) { return std::sin(pi * u[a]); });
  }
  for (int a = 0; a < s; ++a)
    g.emplace_back(name(a) + "^3", [a](const std::vector<double>& u) { return u[a] * u[a] * u[a]; });
  if (s >= 3)
    g.emplace_back("xyz", [](const std::vector<double>& u) { return u[0] * u[1] * u[2]; });
  for (int a = 0; a < s; ++a) {
    const int b = (a + 1) % s;
    g.emplace_back(name(a) + "^2" + name(b), [a, b](const std::vector<double>& u) { return u[a] * u[a] * u[b]; });
  }
  return g;
}

CVec sample_bump_times(const MomentumGrid& grid, double r, const Profile& profile) {
  const int s = grid.dim();
  CVec out = CVec::Zero(grid.size());
  std::vector<double> u(s);
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double rho = grid.config_radius()[i] / r;
    if (rho >= 1.0) continue;
    for (int a = 0; a < s; ++a) u[a] = grid.position(i, a) / r;
    out[i] = bump(rho) * profile(u);
  }
  return out;
}

RMat real_part_checked(const CMat& m, const char* what) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (m.imag().cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw Error(std::string(what) + ": matrix expected real in the J-real basis");
  return m.real();
}

RVec sorted_sqrt_eigs(const RMat& m) {
  Eigen::SelfAdjointEigenSolver<RMat> es(m, Eigen::EigenvaluesOnly);
  RVec ev = es.eigenvalues().reverse();
  return ev.cwiseMax(0.0).cwiseSqrt();
}

}  // namespace

double bump(double radius_ratio) {
  const double q = radius_ratio * radius_ratio;
  if (q >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - q));
}

TestFunctionFamily make_test_family(const MomentumGrid& grid, double r, int m) {
  require(r > 0, "test family radius must be positive");
  require(m >= 1, "test family must have at least one member");
  auto gens = family_generators(grid.dim());
  if (m > static_cast<int>(gens.size()))
    throw PreconditionError("test family size " + std::to_string(m) + " exceeds the " +
                            std::to_string(gens.size()) + " available generators");
  TestFunctionFamily fam;
  fam.radius = r;
  for (int k = 0; k < m; ++k) {
    fam.members.push_back(sample_bump_times(grid, r, gens[k].second));
    fam.labels.push_back(gens[k].first);
  }
  return fam;
}

SpVector Subspace::project(const MomentumGrid& grid, const SpVector& f) const {
  grid.check_shape(f, "Subspace::project");
  if (basis.cols() == 0) return SpVector::Zero(f.size());
  CVec c = grid.weight() * (basis.adjoint() * f);
  if (real_linear) c = c.real().cast<cplx>();
  return basis * c;
}

Subspace build_L_pm(const MomentumGrid& grid, const TestFunctionFamily& family, Sign sign, double tol) {
  if (family.members.empty()) throw PreconditionError("empty test family");
  const double a = (sign == Sign::plus) ? -0.5 : 0.5;
  const DiagonalOperator w = omega_power(grid, a);
  CMat gens(grid.size(), static_cast<Eigen::Index>(family.members.size()));
  for (std::size_t k = 0; k < family.members.size(); ++k)
    gens.col(k) = w.apply(grid.to_momentum(family.members[k]));
  // Real members have J-invariant transforms; orthonormalizing over the reals keeps that.
  Orthonormalized o = orthonormalize_real(gens, grid.weight(), tol);
  if (o.rank == 0) throw PreconditionError("all singular values of the generator family are below tolerance");
  Subspace out;
  out.basis = std::move(o.basis);
  out.sign = sign;
  out.svd_tolerance = tol;
  out.singular_values = o.singular_values;
  return out;
}

Subspace build_L_real(const MomentumGrid& grid, const Subspace& lplus, const Subspace& lminus, double tol) {
  require(lplus.basis.rows() == grid.size() && lminus.basis.rows() == grid.size(),
          "subspaces do not live on this grid");
  std::vector<SpVector> gens;
  const cplx i(0, 1);
  for (Eigen::Index k = 0; k < lplus.dim(); ++k) {
    const SpVector b = lplus.basis.col(k);
    for (const SpVector& v : {SpVector(b), SpVector(i * b)}) gens.push_back(v + conjugate_J(grid, v));
  }
  for (Eigen::Index k = 0; k < lminus.dim(); ++k) {
    const SpVector b = lminus.basis.col(k);
    for (const SpVector& v : {SpVector(b), SpVector(i * b)}) gens.push_back(v - conjugate_J(grid, v));
  }
  CMat g(grid.size(), static_cast<Eigen::Index>(gens.size()));
  for (std::size_t k = 0; k < gens.size(); ++k) g.col(k) = gens[k];
  Orthonormalized o = extend_basis(CMat(grid.size(), 0), g, grid.weight(), tol, true);
  if (o.rank == 0) throw PreconditionError("real subspace degenerate: no direction above tolerance");
  Subspace out;
  out.basis = std::move(o.basis);
  out.svd_tolerance = tol;
  out.singular_values = o.singular_values;
  out.real_linear = true;
  return out;
}

HFunction choose_h(const MomentumGrid& grid, double r, double E) {
  require(r > 0 && E > 0, "choose_h needs r > 0 and E > 0");
  const int s = grid.dim(), n = grid.points_per_axis();
  const double half = 0.5 * r;
  // Lattice offsets (in units of dx) of the half-radius bump's support.
  const int reach = static_cast<int>(std::ceil(half / grid.dx()));
  require(2 * reach < n / 2, "bump support does not fit into the periodic box");
  std::vector<std::vector<int>> pts;
  std::vector<double> vals;
  std::vector<int> idx(s, -reach);
  while (true) {
    double rr = 0;
    for (int a = 0; a < s; ++a) rr += (idx[a] * grid.dx()) * (idx[a] * grid.dx());
    const double v = bump(std::sqrt(rr) / half);
    if (v > 0) {
      pts.push_back(idx);
      vals.push_back(v);
    }
    int a = s - 1;
    for (; a >= 0; --a) {
      if (++idx[a] <= reach) break;
      idx[a] = -reach;
    }
    if (a < 0) break;
  }
  HFunction h;
  h.energy = E;
  h.config = CVec::Zero(grid.size());
  std::vector<int> d(s);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j) {
      for (int a = 0; a < s; ++a) d[a] = pts[j][a] - pts[i][a];
      h.config[grid.config_index(d)] += grid.config_weight() * vals[i] * vals[j];
    }
  RVec sym = grid.to_momentum(h.config).real();
  const double top = sym.maxCoeff();
  if (!(top > 0)) throw CertificateError("bump autocorrelation has no positive Fourier mode");
  h.scale = 1.0 / top;
  h.config *= h.scale;
  h.symbol = sym * h.scale;

  double lo = std::numeric_limits<double>::infinity();
  bool any = false;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    if (grid.omega()[i] > E) continue;
    any = true;
    lo = std::min(lo, h.symbol[i]);
  }
  if (!any) throw PreconditionError("energy window |p| <= E contains no grid point");
  h.min_in_window = lo;
  if (!(lo >= kPositivityFloor))
    throw CertificateError("h positivity certificate failed: min over |p|<=E of h~ is " + std::to_string(lo));
  h.sup_inv_sq = 1.0 / (lo * lo);
  return h;
}

void check_gamma(int s, double gamma) {
  if (!(gamma >= 0.5 && gamma < 0.5 * (s - 1)))
    throw PreconditionError("gamma must lie in [1/2, (s-1)/2); got " + std::to_string(gamma));
}

LocalizationSpectrum build_T(const MomentumGrid& grid, const Subspace& lplus, const Subspace& lminus, double E,
                             double gamma, const HFunction& h) {
  check_gamma(grid.dim(), gamma);
  if (!(E > 0)) throw PreconditionError("E must be positive");
  require(h.symbol.size() == grid.size(), "h does not live on this grid");

  const double w = grid.weight();
  Orthonormalized ext = extend_basis(lplus.basis, lminus.basis, w, 1e-10, true);
  CMat bv(grid.size(), lplus.dim() + ext.rank);
  bv << lplus.basis, ext.basis;

  RVec e_sym = (grid.omega().array() <= E).select(grid.omega().cwiseInverse(), 0.0);
  RVec h_sym = h.symbol.array() * grid.omega().array().pow(-2.0 * gamma);

  LocalizationSpectrum out;
  out.E = E;
  out.gamma = gamma;
  out.jreal_basis = bv;
  out.square = RMat::Zero(bv.cols(), bv.cols());
  const Subspace* subs[2] = {&lplus, &lminus};
  const RVec* syms[2] = {&e_sym, &h_sym};
  const char* names[4] = {"E+", "E-", "h+", "h-"};
  for (int kind = 0; kind < 2; ++kind)
    for (int sg = 0; sg < 2; ++sg) {
      const CMat& b = subs[sg]->basis;
      RMat p = real_part_checked(weighted_gram(b, bv, w), "projection");
      RMat g = real_part_checked(w * (b.adjoint() * (syms[kind]->asDiagonal() * b)), "component symbol");
      ComponentOperator c;
      c.name = names[2 * kind + sg];
      c.square = p.transpose() * g * p;
      c.square = 0.5 * (c.square + c.square.transpose()).eval();
      c.singular_values = sorted_sqrt_eigs(c.square);
      out.square += c.square;
      out.components[2 * kind + sg] = std::move(c);
    }

  Eigen::SelfAdjointEigenSolver<RMat> es(out.square);
  const Eigen::Index d = bv.cols();
  out.t.resize(d);
  out.coefficients.resize(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    out.t[j] = std::sqrt(std::max(0.0, es.eigenvalues()[d - 1 - j]));
    out.coefficients.col(j) = es.eigenvectors().col(d - 1 - j);
  }
  out.vectors = bv * out.coefficients.cast<cplx>();
  return out;
}

double schatten_p(const RVec& spectrum, double p) {
  if (!(p > 0)) throw PreconditionError("Schatten exponent p must be positive");
  double acc = 0;
  for (Eigen::Index j = 0; j < spectrum.size(); ++j)
    if (spectrum[j] > 0) acc += std::pow(spectrum[j], p);
  return acc;
}

InequalityMargin kosaki_check(const RMat& a, const RMat& b, double p) {
  auto trace_pow = [p](const RMat& m) {
    Eigen::SelfAdjointEigenSolver<RMat> es(m, Eigen::EigenvaluesOnly);
    return schatten_p(es.eigenvalues().cwiseMax(0.0), p);
  };
  return {"kosaki", trace_pow(a + b), trace_pow(a) + trace_pow(b)};
}

InequalityMargin subadditivity_check(const LocalizationSpectrum& spec, double p) {
  double rhs = 0;
  for (const auto& c : spec.components) rhs += schatten_p(c.singular_values, p);
  return {"schatten_subadditivity", schatten_p(spec.t, p), rhs};
}

double SmoothCutoff::operator()(double radius) const {
  if (radius <= rho) return 1.0;
  if (radius >= rho + pad) return 0.0;
  const double u = (radius - rho) / pad;
  auto f = [](double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; };
  return f(1.0 - u) / (f(1.0 - u) + f(u));
}

CVec SmoothCutoff::sample(const MomentumGrid& grid, const std::vector<double>& center) const {
  require(static_cast<int>(center.size()) == grid.dim(), "cutoff center of wrong dimension");
  CVec out(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    double rr = 0;
    for (int a = 0; a < grid.dim(); ++a) {
      const double d = grid.position(i, a) - center[a];
      rr += d * d;
    }
    out[i] = (*this)(std::sqrt(rr));
  }
  return out;
}

double chil_identity_check(const MomentumGrid& grid, const Subspace& l, const std::optional<SmoothCutoff>& cutoff) {
  const double a = (l.sign == Sign::plus) ? 0.5 : -0.5;
  const DiagonalOperator up = omega_power(grid, a), down = omega_power(grid, -a);
  CVec chi;
  if (cutoff) chi = cutoff->sample(grid, std::vector<double>(grid.dim(), 0.0));
  double worst = 0;
  for (Eigen::Index k = 0; k < l.dim(); ++k) {
    const SpVector v = l.basis.col(k);
    CVec c = grid.to_config(up.apply(v));
    if (cutoff) c = c.cwiseProduct(chi);
    const SpVector back = down.apply(grid.to_momentum(c));
    worst = std::max(worst, grid.norm(v - back) / grid.norm(v));
  }
  return worst;
}

SpVector Model::component(int j, Sign sign) const {
  require(j >= 0 && j < spectrum.vectors.cols(), "eigenvector index out of range");
  const Subspace& l = (sign == Sign::plus) ? lplus : lminus;
  return l.project(*grid, spectrum.vectors.col(j));
}

Model build_model(const ModelParams& params) {
  Model m;
  m.params = params;
  check_gamma(params.grid.s, params.gamma);
  m.grid = build_grid(params.grid);
  m.family = make_test_family(*m.grid, params.r, params.family_size);
  m.lplus = build_L_pm(*m.grid, m.family, Sign::plus, params.svd_tolerance);
  m.lminus = build_L_pm(*m.grid, m.family, Sign::minus, params.svd_tolerance);
  m.h = choose_h(*m.grid, params.r, params.E);
  m.spectrum = build_T(*m.grid, m.lplus, m.lminus, params.E, params.gamma, m.h);
  return m;
}

}  // namespace nuc
